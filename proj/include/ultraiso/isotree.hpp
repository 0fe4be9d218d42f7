#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ultraiso/geometry.hpp"

namespace ultra {

/// Terminal actions a tree node may take on every sphere it does not list
/// explicitly. Scalars must be units; matrices must preserve the norm
/// (both are checked before a tree is accepted).
enum class LeafKind { Identity, Negation, Scalar, Matrix };

struct Matrix {
    std::size_t n = 0;
    std::vector<FieldElement> entries; // row-major
    const FieldElement& at(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
    FieldElement& at(std::size_t i, std::size_t j) { return entries[i * n + j]; }
    bool operator==(const Matrix&) const = default;
};

Matrix identity_matrix(const Space& space);
Point matrix_apply(const Space& space, const Matrix& m, const Point& x);
/// Nullopt when singular.
std::optional<Matrix> matrix_inverse(const Space& space, const Matrix& m);

struct TreeNode;
using TreeNodePtr = std::shared_ptr<const TreeNode>;

/// Restriction of the map to one open ball of a sphere: the source class is
/// sent onto the ball of `target`; the canonical representative of the source
/// lands exactly on `anchor` (any point of the target ball), and the rest of
/// the ball follows by translate - recurse - translate:
///   x  |->  anchor + child(x - source_rep).
struct BallMap {
    std::size_t target = 0;
    Point anchor;
    TreeNodePtr child; // centred isometry of B(0, r); null means identity
};

/// A permutation of the ball classes of one sphere together with one BallMap
/// per class (indexed in the canonical class order).
struct SphereAction {
    std::vector<BallMap> maps;
};

/// One node of the fractal representation: explicit actions for finitely many
/// spheres, and a leaf action for every other sphere. Always fixes 0.
struct TreeNode {
    LeafKind leaf = LeafKind::Identity;
    FieldElement scalar;           // LeafKind::Scalar
    std::optional<Matrix> matrix;  // LeafKind::Matrix
    std::map<Rational, SphereAction> spheres;
};

/// A centred isometry of the whole space in tree form, with its depth bound.
struct Isometry {
    Space space;
    TreeNodePtr root; // null = identity
    int depth = 0;
};

bool node_equal(const TreeNodePtr& a, const TreeNodePtr& b);
bool tree_equal(const Isometry& a, const Isometry& b);
bool action_equal(const SphereAction& a, const SphereAction& b);
int structural_depth(const TreeNodePtr& node);

/// Full well-formedness check: listed radii attainable and strictly nested,
/// permutations bijective, anchors on the right classes, leaf scalars units,
/// leaf matrices invertible and norm-preserving, structure within `depth`.
void validate_tree(const Isometry& iso);

Point apply(const Isometry& iso, const Point& x);
Point apply_inverse(const Isometry& iso, const Point& y);

using PointFn = std::function<Point(const Point&)>;
PointFn as_fn(const Isometry& iso);
PointFn as_inverse_fn(const Isometry& iso);
/// compose(f, g) = x |-> f(g(x)).
PointFn compose_maps(PointFn f, PointFn g);

/// The disjoint-union map of a class permutation and per-class ball
/// isometries. `anchors[i]`, when present, overrides the canonical target
/// representative as the image of class i's representative.
SphereAction build_sphere_action(const Space& space, const Rational& r,
                                 const std::vector<std::size_t>& sigma,
                                 std::vector<TreeNodePtr> children,
                                 const std::vector<std::optional<Point>>& anchors = {});

/// Glues per-sphere actions (distinct radii below `outer`) into one centred
/// map; identity on every unlisted sphere.
Isometry glue_spheres(const Space& space, std::map<Rational, SphereAction> actions,
                      std::optional<Rational> outer = std::nullopt, int depth = -1);

/// Evaluates a SphereAction as a map of its own sphere.
Point apply_sphere_action(const Space& space, const Rational& r,
                          const SphereAction& action, const Point& x, int depth_left);

struct VerifyResult {
    bool pass = true;
    std::string reason;
    std::optional<std::pair<Point, Point>> witness; // |f(y)-f(x)| != |y-x|
};

/// Checks |f(y) - f(x)| = |y - x| for all enumerated pairs plus bijectivity
/// of the induced map on the enumerated domain. Failure is a result carrying
/// a concrete witness, never an exception.
VerifyResult verify_isometry(const Space& space, const PointFn& fn,
                             const EnumerationSpec& spec);

bool is_norm_preserving(const Space& space, const PointFn& fn,
                        const EnumerationSpec& spec);

/// Concrete non-linearity evidence. Re-evaluating it must reproduce the
/// inequality: either f(x+y) != f(x)+f(y) or f(lambda x) != lambda f(x).
struct NonlinearityCertificate {
    bool homogeneity = false;
    Point x;
    Point y;             // additivity only
    FieldElement lambda; // homogeneity only
};

bool certificate_holds(const Space& space, const PointFn& fn,
                       const NonlinearityCertificate& cert);

struct LinearityReport {
    bool linear = true;
    std::optional<NonlinearityCertificate> cert;
};

/// Exhaustive over finite spaces; seeded sampling of scalars and pairs on
/// p-adic domains.
LinearityReport is_linear(const Space& space, const PointFn& fn,
                          const EnumerationSpec& spec, std::uint64_t seed = 1);
LinearityReport is_affine(const Space& space, const PointFn& fn,
                          const EnumerationSpec& spec, std::uint64_t seed = 1);

/// Reconstructs the tree of a centred isometry: per sphere the induced class
/// permutation, per class the anchor f(rep) and the recursively factored
/// child. Deterministic; output is in canonical (pruned) form.
/// Throws DomainError when the map is not centred or not an isometry on the
/// domain (the message carries the witness), DepthExhausted when `depth`
/// cannot express the map.
Isometry factor_isometry(const Space& space, const PointFn& fn,
                         const EnumerationSpec& spec, int depth);

/// Structural normal form: identequivalent-to-leaf spheres dropped, unit
/// scalars and char-2 negations folded to identity, identity children nulled.
TreeNodePtr canonicalize(const Space& space, const TreeNodePtr& node);
Isometry canonicalized(const Isometry& iso);

/// x |-> alpha f(x / alpha), an action on S(|alpha| r), returned in factored
/// form at the given depth.
SphereAction dilation_transport(const Space& space, const Rational& r,
                                const SphereAction& action, const FieldElement& alpha,
                                int depth);

/// Seeded random tree over the radii of `spec`: random class permutations,
/// occasionally perturbed anchors, random children and leaf actions.
Isometry random_isometry(const Space& space, const EnumerationSpec& spec, int depth,
                         std::uint64_t seed);

/// Every sphere radius the tree touches, at any level, sorted ascending.
std::vector<Rational> tree_radii(const Isometry& iso);

std::string point_str(const Space& space, const Point& x);

} // namespace ultra
