/* Copyright 2026 The MSwin Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include "mswin/attention.hpp"
#include "mswin/tensor.hpp"

namespace mswin {

/// Per-token evaluation of windowed attention on an [H, W, E] map, written
/// without cyclic shifts, partitions or masks. The displaced window grid is
/// laid over the zero-padded map directly: along each axis, positions [0, n)
/// form one window and the rest are cut every m positions starting at n. A
/// token attends to every real (unpadded) token of its window, with the
/// relative position bias looked up from the original coordinate offset.
///
/// Slow (O(H W m^2 E)) and untaped; meant as an oracle for the fast path.
template <class Real>
Tensor<Real> reference_window_attention(const Tensor<Real>& x,
                                        const AttentionParams<Real>& params);

}  // namespace mswin
