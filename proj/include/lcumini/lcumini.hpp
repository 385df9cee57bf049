// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_LCUMINI_HPP
#define LCUMINI_LCUMINI_HPP

#include "lcumini/bench.hpp"
#include "lcumini/checkpoint.hpp"
#include "lcumini/config.hpp"
#include "lcumini/dataset_export.hpp"
#include "lcumini/flow.hpp"
#include "lcumini/gradcheck.hpp"
#include "lcumini/lcu.hpp"
#include "lcumini/lora.hpp"
#include "lcumini/metrics.hpp"
#include "lcumini/model.hpp"
#include "lcumini/optim.hpp"
#include "lcumini/ppm.hpp"
#include "lcumini/sampler.hpp"
#include "lcumini/tasks.hpp"
#include "lcumini/tensor.hpp"
#include "lcumini/trainer.hpp"

#endif  // LCUMINI_LCUMINI_HPP
