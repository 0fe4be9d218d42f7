#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ultraiso/space.hpp"

namespace ultra {

/// Open or closed ball; radius absent means the whole space.
struct Ball {
    Point center;
    std::optional<Rational> radius;
    bool closed = false;
};

bool ball_contains(const Space& space, const Ball& ball, const Point& y);

/// One equivalence class of x ~ y  <=>  |y - x| < r inside the sphere S(r),
/// i.e. an open ball of radius r, named by its canonical representative
/// (the minimum of the class in the deterministic point order).
struct BallClass {
    Rational radius;
    Point rep;
};

/// Precomputed shape of residue keys at one level radius: which coordinates
/// participate (finite fields) or up to which digit position they count
/// (p-adic). Avoids re-deriving exponents from rationals in hot loops.
struct KeyPlan {
    bool finite = true;
    std::vector<int> modulus_exp;  // p-adic: digits below this position count
    std::vector<bool> include;     // finite: coordinate pinned by the level
};

KeyPlan make_key_plan(const Space& space, const Rational& rho);
void append_residue_key(const Space& space, const KeyPlan& plan, const Point& x,
                        std::string& out);

/// The complete, exact partition of a sphere into its ball classes.
/// `classes` is empty exactly when the sphere is empty.
struct SphereDecomposition {
    Rational radius;
    KeyPlan plan; // key plan at level r, for O(dim) class routing
    std::vector<BallClass> classes; // sorted by representative
    std::unordered_map<std::string, std::size_t> index_by_key;
};

using SphereDecompositionPtr = std::shared_ptr<const SphereDecomposition>;

/// x ~_r y. Both points must lie on S(r).
bool same_class(const Space& space, const Point& x, const Point& y, const Rational& r);

/// Exact class list of S(r); cached per space and radius. An unattainable
/// radius yields an empty decomposition, not an error.
SphereDecompositionPtr decompose_sphere(const Space& space, const Rational& r);

/// Routing key of x modulo the open ball of radius rho: two points get equal
/// keys iff their distance is < rho. O(dim) and allocation-light.
std::string residue_key(const Space& space, const Point& x, const Rational& rho);

/// Index of x's class within the decomposition. x must lie on the sphere.
std::size_t class_index_of(const Space& space, const SphereDecomposition& dec,
                           const Point& x);

/// All sphere points enumerable at the given depth: exact for finite spaces;
/// for p-adic spaces, one representative per residue of S(r) modulo the open
/// ball of radius r * p^-depth. Sorted canonically; cached per space.
const std::vector<Point>& sphere_points(const Space& space, const Rational& r,
                                        int depth);

/// Norm window plus residue depth: the finite domain all verification and
/// factoring work runs over. Holds the points of norm in [lo, hi] plus 0.
struct EnumerationSpec {
    Rational lo;
    Rational hi;
    int depth = 3;
};

std::vector<Rational> domain_radii(const Space& space, const EnumerationSpec& spec);
std::vector<Point> domain_points(const Space& space, const EnumerationSpec& spec);

/// Whole-space spec for finite spaces; for p-adic spaces, covers
/// the given closed norm interval.
EnumerationSpec full_spec(const Space& space, int depth = 3);

/// B(x, r_open) == B[x, r_closed], decided exactly from the value set.
bool closed_ball_equals_open(const Space& space, const Rational& r_open,
                             const Rational& r_closed);

} // namespace ultra
