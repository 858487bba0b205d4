#pragma once

#include "sarcgen/simd/kernels.hpp"

namespace sarcgen::simd::detail {

// Fixed pairwise reduction shared by all variants.
inline float reduce_lanes(const float (&acc)[kLanes]) {
    const float s01 = acc[0] + acc[1];
    const float s23 = acc[2] + acc[3];
    const float s45 = acc[4] + acc[5];
    const float s67 = acc[6] + acc[7];
    return (s01 + s23) + (s45 + s67);
}

}  // namespace sarcgen::simd::detail
