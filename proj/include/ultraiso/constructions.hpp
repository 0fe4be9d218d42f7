#pragma once

#include <map>
#include <optional>
#include <string>

#include "ultraiso/isotree.hpp"

namespace ultra {

/// Negation on S(r), identity everywhere else. In characteristic 2 this is
/// the identity. Verified before it is returned.
Isometry sphere_flip(const Space& space, const Rational& r, int depth = 3);

/// x |-> x + x0 on S(r), identity elsewhere; requires |x0| < r.
Isometry sphere_translate(const Space& space, const Rational& r, const Point& x0,
                          int depth = 3);

/// A verified centred isometry sending x to y (|x| = |y| = r > 0): a
/// translation within their ball class, or a swap of the two classes.
Isometry transitivity_witness(const Space& space, const Point& x, const Point& y,
                              int depth = 3);

struct ClassificationResult {
    bool all_linear = false;
    std::string case_name; // which branch of the analysis produced the verdict
    std::optional<Isometry> witness;
    std::optional<NonlinearityCertificate> certificate;
};

/// Decides whether every centred isometry of the space is linear, and if not,
/// returns a machine-checked nonlinear witness with a concrete certificate.
/// P-adic spaces always admit a witness once the valuation window shows at
/// least three norm values.
ClassificationResult classify(const Space& space, int depth = 3);

/// The interleaving bijection from sphere exponents to ball sphere slots:
/// 0 -> 0, n -> 2n, -n -> 2n - 1 (n >= 1).
int interleave_exponent(int n);
int uninterleave_exponent(int j);

/// Self-similarity demo for p-adic spaces with unit weights: packs one sphere
/// action per exponent n (acting on S(p^n)) into a single isometry of the
/// open unit ball, placing action n on the sphere of radius p^-(j+1) where
/// j = interleave_exponent(n), each transported by an exact dilation.
Isometry fold_sphere_family(const Space& space,
                            const std::map<int, SphereAction>& family, int depth = 3);
std::map<int, SphereAction> unfold_sphere_family(const Space& space,
                                                 const Isometry& folded, int exp_min,
                                                 int exp_max, int depth = 3);

} // namespace ultra
