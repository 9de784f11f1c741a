// Copyright 2026 The asrkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <string>

#include "asrkit/autograd.hpp"
#include "asrkit/toymodel.hpp"

namespace asrkit::toymodel::detail {

using Id = autograd::Graph::Id;

/// Lazily turns named parameters into graph leaves.
class Binder {
 public:
  Binder(autograd::Graph& g, const ModelParams& p, bool track) : g_(g), p_(p), track_(track) {}

  Id operator()(const std::string& name);
  autograd::Graph& graph() { return g_; }
  const ModelParams& params() const { return p_; }
  /// Gradients of every bound parameter after backward (zeros if unreached).
  Gradients gradients() const;

 private:
  autograd::Graph& g_;
  const ModelParams& p_;
  bool track_;
  std::map<std::string, Id> ids_;
};

Id build_encoder(Binder& b, const audio::AudioClip& clip);
Id build_masking(Binder& b, Id z, const MaskIndices& masks);
Id build_context(Binder& b, Id z_masked);
Id build_linear(Binder& b, Id x, const std::string& prefix);

std::vector<bool> to_flags(const std::vector<int>& indices, Eigen::Index n);

/// splitmix64 over the inputs; used to derive per-step seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace asrkit::toymodel::detail
