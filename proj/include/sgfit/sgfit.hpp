// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sgfit/brdf.hpp"
#include "sgfit/dual.hpp"
#include "sgfit/envmap.hpp"
#include "sgfit/fit.hpp"
#include "sgfit/geometry.hpp"
#include "sgfit/grad.hpp"
#include "sgfit/gradcheck.hpp"
#include "sgfit/image.hpp"
#include "sgfit/loss.hpp"
#include "sgfit/material.hpp"
#include "sgfit/math.hpp"
#include "sgfit/nnls.hpp"
#include "sgfit/optim.hpp"
#include "sgfit/parallel.hpp"
#include "sgfit/record.hpp"
#include "sgfit/render.hpp"
#include "sgfit/rng.hpp"
#include "sgfit/scene.hpp"
#include "sgfit/sg.hpp"
#include "sgfit/shading.hpp"
