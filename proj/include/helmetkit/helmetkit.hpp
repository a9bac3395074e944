// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "helmetkit/annotations.hpp"
#include "helmetkit/apportion.hpp"
#include "helmetkit/config.hpp"
#include "helmetkit/detections.hpp"
#include "helmetkit/error.hpp"
#include "helmetkit/metrics.hpp"
#include "helmetkit/rates.hpp"
#include "helmetkit/sampler.hpp"
#include "helmetkit/split.hpp"
#include "helmetkit/taxonomy.hpp"
#include "helmetkit/timestamp.hpp"
