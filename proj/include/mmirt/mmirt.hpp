#pragma once

#include "mmirt/cat.hpp"
#include "mmirt/error.hpp"
#include "mmirt/experiments.hpp"
#include "mmirt/format.hpp"
#include "mmirt/kernels.hpp"
#include "mmirt/metrics.hpp"
#include "mmirt/model.hpp"
#include "mmirt/report.hpp"
#include "mmirt/rng.hpp"
#include "mmirt/simulate.hpp"
#include "mmirt/tensor.hpp"
#include "mmirt/training.hpp"
