// Copyright 2026 The mart-cpp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MART__MART_HPP_
#define MART__MART_HPP_

#include "mart/age.hpp"
#include "mart/array.hpp"
#include "mart/attention.hpp"
#include "mart/checkpoint.hpp"
#include "mart/config.hpp"
#include "mart/counting.hpp"
#include "mart/data.hpp"
#include "mart/decoder.hpp"
#include "mart/errors.hpp"
#include "mart/eval.hpp"
#include "mart/features.hpp"
#include "mart/gradcheck.hpp"
#include "mart/hrt.hpp"
#include "mart/layers.hpp"
#include "mart/model.hpp"
#include "mart/params.hpp"
#include "mart/prt.hpp"
#include "mart/scene.hpp"
#include "mart/tape.hpp"
#include "mart/train.hpp"

#endif  // MART__MART_HPP_
