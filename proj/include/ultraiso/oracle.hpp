#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ultraiso/isotree.hpp"
#include "ultraiso/space.hpp"

namespace ultra {

/// A total map on a finite space, images indexed by dense point index.
struct DenseMap {
    std::vector<std::uint32_t> img;
};

PointFn dense_to_fn(const Space& space, DenseMap map);

/// Ground-truth census of the centred isometries of a finite space.
/// Exact when the candidate space fits the cap; otherwise `sampled` is set,
/// the counts are left at zero and only the witness search ran.
struct IsometryCensus {
    bool sampled = false;
    std::string candidates; // product of per-sphere factorials, decimal
    std::uint64_t total = 0;
    std::uint64_t linear = 0;
    std::uint64_t affine = 0;
    std::optional<DenseMap> nonlinear_witness;
};

/// Every centred isometry of a finite space, by brute force: candidates are
/// products of per-sphere bijections (isometries preserve norms), and each
/// one is kept iff it preserves all pairwise distances. Enumeration order is
/// deterministic. Throws CapExceeded when there are more candidates than
/// `cap`; nothing partial is returned.
std::vector<DenseMap> enumerate_centred_isometries(const Space& space,
                                                   std::uint64_t cap = 1'000'000);

IsometryCensus census(const Space& space, std::uint64_t cap = 1'000'000);

/// Census-derived. For over-cap spaces: false when the deterministic witness
/// search finds a nonlinear centred isometry, DomainError when it does not
/// (the oracle never guesses).
bool all_centred_isometries_linear(const Space& space, std::uint64_t cap = 1'000'000);

struct IsoscelesResult {
    bool pass = true;
    Point x, y, z; // |x-z| < |y-z| but |y-x| != |y-z|
};

/// Every ordered triple of a finite space.
IsoscelesResult check_isosceles_exhaustive(const Space& space);
/// Seeded random triples (p-adic spaces).
IsoscelesResult check_isosceles_sampled(const Space& space, std::size_t count,
                                        std::uint64_t seed);

} // namespace ultra
