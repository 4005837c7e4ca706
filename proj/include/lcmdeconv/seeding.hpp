#pragma once

#include <cstdint>
#include <string_view>

namespace lcmdeconv {

//! Seed for replicate `replicate` of cell `cell` under `master_seed`.
//!
//! (cell, replicate) is packed into one 64-bit word, xored with a mixed
//! master seed and passed through a bijective finalizer, so for a fixed master
//! seed the map is injective as long as cell and replicate fit in 32 bits.
//! Nothing depends on evaluation order.
std::uint64_t seed_for(std::uint64_t master_seed, std::uint64_t cell, std::uint64_t replicate);

//! Stable 32-bit id for a cell label (FNV-1a folded), used as `cell` above
//! so that reordering cells in a plan does not change their streams.
std::uint32_t cell_id(std::string_view label);

} // namespace lcmdeconv
