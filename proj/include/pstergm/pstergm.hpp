#pragma once

#include "pstergm/error.hpp"
#include "pstergm/network.hpp"
#include "pstergm/dynamics.hpp"
#include "pstergm/stats.hpp"
#include "pstergm/model.hpp"
#include "pstergm/random.hpp"
#include "pstergm/sampler.hpp"
#include "pstergm/estimate.hpp"
#include "pstergm/gof.hpp"
#include "pstergm/io.hpp"
#include "pstergm/config.hpp"
#include "pstergm/report.hpp"
