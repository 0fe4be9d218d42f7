#include "ultraiso/isotree.hpp"

#include <algorithm>
#include <span>
#include <unordered_map>
#include <unordered_set>

#include "ultraiso/errors.hpp"
#include "ultraiso/prng.hpp"

namespace ultra {

namespace {

constexpr std::size_t kAllPairsSphereLimit = 300;

Rational smallest_value(const Space& space) { return space.value_set_all().front(); }

/// Key identifying a point exactly at the working resolution: its norm plus
/// its residue at the finest enumerated level of its sphere.
std::string fine_key(const Space& space, const Point& x, int depth) {
    if (space.is_zero(x)) return "0";
    const Rational r = space.norm(x);
    Rational rho = r;
    if (!space.is_finite()) {
        rho = r * rat_prime_power(space.field().desc().p, -depth);
    } else {
        rho = smallest_value(space); // pins every coordinate exactly
        if (rho > r) rho = r;
    }
    return rat_str(r) + "#" + residue_key(space, x, rho);
}

bool same_at_resolution(const Space& space, const Point& a, const Point& b, int depth) {
    if (a == b) return true;
    return fine_key(space, a, depth) == fine_key(space, b, depth);
}

} // namespace

std::string point_str(const Space& space, const Point& x) {
    std::string s = "(";
    for (std::size_t i = 0; i < x.coords.size(); ++i) {
        if (i) s += ", ";
        s += space.field().format(x.coords[i]);
    }
    return s + ")";
}

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

Matrix identity_matrix(const Space& space) {
    Matrix m;
    m.n = space.dim();
    m.entries.assign(m.n * m.n, space.field().zero());
    for (std::size_t i = 0; i < m.n; ++i) m.at(i, i) = space.field().one();
    return m;
}

Point matrix_apply(const Space& space, const Matrix& m, const Point& x) {
    const Field& f = space.field();
    Point y = space.zero_point();
    for (std::size_t i = 0; i < m.n; ++i) {
        FieldElement acc = f.zero();
        for (std::size_t j = 0; j < m.n; ++j)
            acc = f.add(acc, f.mul(m.at(i, j), x.coords[j]));
        y.coords[i] = acc;
    }
    return y;
}

std::optional<Matrix> matrix_inverse(const Space& space, const Matrix& m) {
    const Field& f = space.field();
    const std::size_t n = m.n;
    Matrix a = m;
    Matrix inv = identity_matrix(space);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && f.is_zero(a.at(pivot, col))) ++pivot;
        if (pivot == n) return std::nullopt;
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a.at(pivot, j), a.at(col, j));
                std::swap(inv.at(pivot, j), inv.at(col, j));
            }
        }
        const FieldElement scale = f.inv(a.at(col, col));
        for (std::size_t j = 0; j < n; ++j) {
            a.at(col, j) = f.mul(scale, a.at(col, j));
            inv.at(col, j) = f.mul(scale, inv.at(col, j));
        }
        for (std::size_t row = 0; row < n; ++row) {
            if (row == col || f.is_zero(a.at(row, col))) continue;
            const FieldElement factor = a.at(row, col);
            for (std::size_t j = 0; j < n; ++j) {
                a.at(row, j) = f.sub(a.at(row, j), f.mul(factor, a.at(col, j)));
                inv.at(row, j) = f.sub(inv.at(row, j), f.mul(factor, inv.at(col, j)));
            }
        }
    }
    return inv;
}

// ---------------------------------------------------------------------------
// Structure
// ---------------------------------------------------------------------------

bool node_equal(const TreeNodePtr& a, const TreeNodePtr& b) {
    const TreeNode empty;
    const TreeNode& na = a ? *a : empty;
    const TreeNode& nb = b ? *b : empty;
    if (na.leaf != nb.leaf) return false;
    if (na.leaf == LeafKind::Scalar && !(na.scalar == nb.scalar)) return false;
    if (na.leaf == LeafKind::Matrix && !(na.matrix == nb.matrix)) return false;
    if (na.spheres.size() != nb.spheres.size()) return false;
    auto ib = nb.spheres.begin();
    for (auto ia = na.spheres.begin(); ia != na.spheres.end(); ++ia, ++ib) {
        if (ia->first != ib->first) return false;
        const auto& ma = ia->second.maps;
        const auto& mb = ib->second.maps;
        if (ma.size() != mb.size()) return false;
        for (std::size_t i = 0; i < ma.size(); ++i) {
            if (ma[i].target != mb[i].target || !(ma[i].anchor == mb[i].anchor) ||
                !node_equal(ma[i].child, mb[i].child))
                return false;
        }
    }
    return true;
}

bool tree_equal(const Isometry& a, const Isometry& b) {
    return a.space == b.space && node_equal(a.root, b.root);
}

bool action_equal(const SphereAction& a, const SphereAction& b) {
    if (a.maps.size() != b.maps.size()) return false;
    for (std::size_t i = 0; i < a.maps.size(); ++i)
        if (a.maps[i].target != b.maps[i].target ||
            !(a.maps[i].anchor == b.maps[i].anchor) ||
            !node_equal(a.maps[i].child, b.maps[i].child))
            return false;
    return true;
}

int structural_depth(const TreeNodePtr& node) {
    if (!node || node->spheres.empty()) return 0;
    int deepest = 0;
    for (const auto& [r, action] : node->spheres)
        for (const auto& bm : action.maps)
            deepest = std::max(deepest, structural_depth(bm.child));
    return 1 + deepest;
}

namespace {

// Radii to test a linear map's norm preservation on. For p-adic spaces one
// representative per p-power orbit of values is enough: |M(p^k x)| = |p^k| |Mx|
// carries the property to every other sphere exactly.
std::vector<Rational> linear_check_radii(const Space& space) {
    const auto vals = space.value_set_all();
    if (space.is_finite()) return vals;
    std::vector<Rational> reps;
    for (const auto& v : vals)
        if (!std::binary_search(vals.begin(), vals.end(),
                                v / space.field().desc().p))
            reps.push_back(v);
    return reps;
}

void validate_leaf(const Space& space, const TreeNode& node) {
    if (node.leaf == LeafKind::Scalar) {
        space.field().check_canonical(node.scalar);
        if (space.field().abs_value(node.scalar) != 1)
            throw DomainError("scalar leaf must be a unit");
    }
    if (node.leaf == LeafKind::Matrix) {
        if (!node.matrix || node.matrix->n != space.dim() ||
            node.matrix->entries.size() != space.dim() * space.dim())
            throw ParseError("matrix leaf has wrong shape");
        for (const auto& e : node.matrix->entries) space.field().check_canonical(e);
        if (!matrix_inverse(space, *node.matrix))
            throw DomainError("matrix leaf is singular");
        const Matrix& m = *node.matrix;
        const int depth = space.is_finite()
                              ? 0
                              : std::min<int>(2, static_cast<int>(
                                                     space.field().desc().precision) -
                                                     1);
        for (const auto& r : linear_check_radii(space))
            for (const auto& x : sphere_points(space, r, depth))
                if (space.norm(matrix_apply(space, m, x)) != r)
                    throw DomainError("matrix leaf does not preserve the norm");
    }
}

void validate_node(const Space& space, const TreeNode* node,
                   const std::optional<Rational>& outer, int depth_left,
                   const std::vector<Rational>& values) {
    if (!node) return;
    validate_leaf(space, *node);
    for (const auto& [r, action] : node->spheres) {
        if (depth_left <= 0)
            throw DepthExhausted("tree structure exceeds the declared depth bound");
        if (outer && r >= *outer)
            throw DomainError("sphere radius " + rat_str(r) +
                              " is not inside the enclosing ball");
        if (!std::binary_search(values.begin(), values.end(), r))
            throw DomainError("radius " + rat_str(r) + " is not an attainable norm value");
        auto dec = decompose_sphere(space, r);
        if (action.maps.size() != dec->classes.size())
            throw DomainError("sphere action at radius " + rat_str(r) + " has " +
                              std::to_string(action.maps.size()) + " ball maps, expected " +
                              std::to_string(dec->classes.size()));
        std::vector<bool> hit(action.maps.size(), false);
        for (const auto& bm : action.maps) {
            if (bm.target >= action.maps.size() || hit[bm.target])
                throw DomainError("class permutation at radius " + rat_str(r) +
                                  " is not a bijection");
            hit[bm.target] = true;
            space.check_point(bm.anchor);
            if (space.norm(bm.anchor) != r)
                throw DomainError("anchor is not on the sphere of radius " + rat_str(r));
            if (class_index_of(space, *dec, bm.anchor) != bm.target)
                throw DomainError("anchor does not lie in its target class");
            validate_node(space, bm.child.get(), r, depth_left - 1, values);
        }
    }
}

} // namespace

void validate_tree(const Isometry& iso) {
    if (iso.depth < 0) throw ParseError("depth must be >= 0", "depth");
    validate_node(iso.space, iso.root.get(), std::nullopt, iso.depth,
                  iso.space.value_set_all());
}

// ---------------------------------------------------------------------------
// Application
// ---------------------------------------------------------------------------

namespace {

Point apply_leaf(const Space& space, const TreeNode& node, const Point& x) {
    switch (node.leaf) {
    case LeafKind::Identity: return x;
    case LeafKind::Negation: return space.neg(x);
    case LeafKind::Scalar: return space.scalar_mul(node.scalar, x);
    case LeafKind::Matrix: return matrix_apply(space, *node.matrix, x);
    }
    return x;
}

Point apply_leaf_inverse(const Space& space, const TreeNode& node, const Point& y) {
    switch (node.leaf) {
    case LeafKind::Identity: return y;
    case LeafKind::Negation: return space.neg(y);
    case LeafKind::Scalar: return space.scalar_mul(space.field().inv(node.scalar), y);
    case LeafKind::Matrix: {
        auto inv = matrix_inverse(space, *node.matrix);
        if (!inv) throw DomainError("matrix leaf is singular");
        return matrix_apply(space, *inv, y);
    }
    }
    return y;
}

Point apply_node(const Space& space, const TreeNode* node, const Point& x,
                 int depth_left) {
    if (!node || space.is_zero(x)) return x;
    const Rational r = space.norm(x);
    auto it = node->spheres.find(r);
    if (it == node->spheres.end()) return apply_leaf(space, *node, x);
    if (depth_left <= 0)
        throw DepthExhausted("depth exhausted inside a non-identity branch at radius " +
                             rat_str(r));
    auto dec = decompose_sphere(space, r);
    const std::size_t i = class_index_of(space, *dec, x);
    const BallMap& bm = it->second.maps[i];
    const Point u = space.sub(x, dec->classes[i].rep);
    const Point v = apply_node(space, bm.child.get(), u, depth_left - 1);
    return space.add(bm.anchor, v);
}

Point apply_node_inverse(const Space& space, const TreeNode* node, const Point& y,
                         int depth_left) {
    if (!node || space.is_zero(y)) return y;
    const Rational r = space.norm(y);
    auto it = node->spheres.find(r);
    if (it == node->spheres.end()) return apply_leaf_inverse(space, *node, y);
    if (depth_left <= 0)
        throw DepthExhausted("depth exhausted inside a non-identity branch at radius " +
                             rat_str(r));
    auto dec = decompose_sphere(space, r);
    const std::size_t j = class_index_of(space, *dec, y);
    std::size_t i = 0;
    while (i < it->second.maps.size() && it->second.maps[i].target != j) ++i;
    const BallMap& bm = it->second.maps[i];
    const Point u = space.sub(y, bm.anchor);
    const Point v = apply_node_inverse(space, bm.child.get(), u, depth_left - 1);
    return space.add(dec->classes[i].rep, v);
}

} // namespace

Point apply(const Isometry& iso, const Point& x) {
    return apply_node(iso.space, iso.root.get(), x, iso.depth);
}

Point apply_inverse(const Isometry& iso, const Point& y) {
    return apply_node_inverse(iso.space, iso.root.get(), y, iso.depth);
}

PointFn as_fn(const Isometry& iso) {
    return [iso](const Point& x) { return apply(iso, x); };
}

PointFn as_inverse_fn(const Isometry& iso) {
    return [iso](const Point& y) { return apply_inverse(iso, y); };
}

PointFn compose_maps(PointFn f, PointFn g) {
    return [f = std::move(f), g = std::move(g)](const Point& x) { return f(g(x)); };
}

Point apply_sphere_action(const Space& space, const Rational& r,
                          const SphereAction& action, const Point& x, int depth_left) {
    if (space.norm(x) != r)
        throw DomainError("point is not on the sphere of radius " + rat_str(r));
    auto dec = decompose_sphere(space, r);
    const std::size_t i = class_index_of(space, *dec, x);
    const BallMap& bm = action.maps[i];
    const Point u = space.sub(x, dec->classes[i].rep);
    return space.add(bm.anchor, apply_node(space, bm.child.get(), u, depth_left));
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

SphereAction build_sphere_action(const Space& space, const Rational& r,
                                 const std::vector<std::size_t>& sigma,
                                 std::vector<TreeNodePtr> children,
                                 const std::vector<std::optional<Point>>& anchors) {
    auto dec = decompose_sphere(space, r);
    const std::size_t k = dec->classes.size();
    if (k == 0) throw DomainError("the sphere of radius " + rat_str(r) + " is empty");
    if (sigma.size() != k)
        throw DomainError("permutation size " + std::to_string(sigma.size()) +
                          " does not match the " + std::to_string(k) + " ball classes");
    if (children.size() != k) throw DomainError("child count mismatch");
    if (!anchors.empty() && anchors.size() != k) throw DomainError("anchor count mismatch");
    std::vector<bool> hit(k, false);
    SphereAction action;
    action.maps.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (sigma[i] >= k || hit[sigma[i]])
            throw DomainError("sigma is not a bijection of the ball classes");
        hit[sigma[i]] = true;
        action.maps[i].target = sigma[i];
        if (!anchors.empty() && anchors[i]) {
            const Point& a = *anchors[i];
            if (space.norm(a) != r || class_index_of(space, *dec, a) != sigma[i])
                throw DomainError("anchor of class " + std::to_string(i) +
                                  " does not lie in its target class");
            action.maps[i].anchor = a;
        } else {
            action.maps[i].anchor = dec->classes[sigma[i]].rep;
        }
        action.maps[i].child = std::move(children[i]);
    }
    return action;
}

Isometry glue_spheres(const Space& space, std::map<Rational, SphereAction> actions,
                      std::optional<Rational> outer, int depth) {
    auto node = std::make_shared<TreeNode>();
    for (auto& [r, action] : actions) {
        if (outer && r >= *outer)
            throw DomainError("action radius " + rat_str(r) +
                              " is not below the outer radius " + rat_str(*outer));
        node->spheres.emplace(r, std::move(action));
    }
    Isometry iso{space, node->spheres.empty() ? nullptr : TreeNodePtr(node), 0};
    iso.depth = depth >= 0 ? depth : std::max(1, structural_depth(iso.root));
    validate_tree(iso);
    return iso;
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

namespace {

VerifyResult fail_pair(const Space& space, const Point& x, const Point& y,
                       const Point& fx, const Point& fy, const std::string& what) {
    VerifyResult res;
    res.pass = false;
    res.witness = std::make_pair(x, y);
    res.reason = what + ": |y-x| = " + rat_str(space.distance(x, y)) +
                 " but |f(y)-f(x)| = " + rat_str(space.distance(fx, fy)) + " for x = " +
                 point_str(space, x) + ", y = " + point_str(space, y);
    return res;
}

// All-pairs check of one block of points against their images.
std::optional<VerifyResult> check_all_pairs(const Space& space,
                                            const std::vector<Point>& pts,
                                            const std::vector<Point>& imgs) {
    for (std::size_t a = 0; a < pts.size(); ++a)
        for (std::size_t b = a + 1; b < pts.size(); ++b)
            if (space.distance(pts[a], pts[b]) != space.distance(imgs[a], imgs[b]))
                return fail_pair(space, pts[a], pts[b], imgs[a], imgs[b],
                                 "distance not preserved");
    return std::nullopt;
}

// Level-partition check of one sphere: for every attainable level v <= r the
// relation |y-x| < v must be carried exactly onto the images. Equivalent to
// the all-pairs check because distances only take attainable values.
std::optional<VerifyResult> check_sphere_levels(const Space& space,
                                                const std::vector<Point>& pts,
                                                const std::vector<Point>& imgs,
                                                const std::vector<Rational>& levels) {
    std::string src, dst;
    for (const auto& v : levels) {
        const KeyPlan plan = make_key_plan(space, v);
        std::unordered_map<std::string, std::pair<std::string, std::size_t>> cell_img;
        std::unordered_map<std::string, std::size_t> img_owner;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            src.clear();
            dst.clear();
            append_residue_key(space, plan, pts[i], src);
            append_residue_key(space, plan, imgs[i], dst);
            auto [it, inserted] = cell_img.emplace(src, std::make_pair(dst, i));
            if (!inserted && it->second.first != dst) {
                const std::size_t j = it->second.second;
                return fail_pair(space, pts[j], pts[i], imgs[j], imgs[i],
                                 "distance not preserved");
            }
            auto [oit, fresh] = img_owner.emplace(dst, i);
            if (!fresh) {
                const std::size_t j = oit->second;
                std::string other;
                append_residue_key(space, plan, pts[j], other);
                if (other != src)
                    return fail_pair(space, pts[j], pts[i], imgs[j], imgs[i],
                                     "distance not preserved");
            }
        }
    }
    return std::nullopt;
}

} // namespace

bool is_norm_preserving(const Space& space, const PointFn& fn,
                        const EnumerationSpec& spec) {
    if (!space.is_zero(fn(space.zero_point()))) return false;
    for (const auto& r : domain_radii(space, spec))
        for (const auto& x : sphere_points(space, r, spec.depth))
            if (space.norm(fn(x)) != r) return false;
    return true;
}

VerifyResult verify_isometry(const Space& space, const PointFn& fn,
                             const EnumerationSpec& spec) {
    const auto radii = domain_radii(space, spec);
    const Point zero = space.zero_point();
    const Point f_zero = fn(zero);

    // Stage 1: norm preservation decides which strategy applies.
    bool norm_ok = space.is_zero(f_zero);
    std::vector<std::vector<Point>> pts(radii.size()), imgs(radii.size());
    for (std::size_t k = 0; k < radii.size(); ++k) {
        pts[k] = sphere_points(space, radii[k], spec.depth);
        imgs[k].reserve(pts[k].size());
        for (const auto& x : pts[k]) {
            imgs[k].push_back(fn(x));
            if (space.norm(imgs[k].back()) != radii[k]) norm_ok = false;
        }
    }

    if (!norm_ok) {
        // General fallback: direct pairwise check over the whole domain.
        // (A map can be an isometry without preserving norms - translations -
        // so this is a slower path, not a failure.)
        std::vector<Point> all{zero}, all_img{f_zero};
        for (std::size_t k = 0; k < radii.size(); ++k) {
            all.insert(all.end(), pts[k].begin(), pts[k].end());
            all_img.insert(all_img.end(), imgs[k].begin(), imgs[k].end());
        }
        if (all.size() > 20000)
            throw DomainError("domain too large to verify a non-norm-preserving map");
        std::unordered_map<std::string, std::size_t> seen;
        for (std::size_t i = 0; i < all.size(); ++i) {
            auto [it, fresh] = seen.emplace(fine_key(space, all_img[i], spec.depth), i);
            if (!fresh)
                return fail_pair(space, all[it->second], all[i], all_img[it->second],
                                 all_img[i], "map is not injective on the domain");
        }
        if (auto bad = check_all_pairs(space, all, all_img)) return *bad;
        VerifyResult ok;
        // The image set must be the domain itself for bijectivity; distinct
        // images of the right cardinality leave only containment to check.
        std::unordered_set<std::string> domain_keys;
        for (const auto& x : all) domain_keys.insert(fine_key(space, x, spec.depth));
        for (std::size_t i = 0; i < all.size(); ++i) {
            if (!domain_keys.count(fine_key(space, all_img[i], spec.depth))) {
                ok.pass = false;
                ok.reason = "image of " + point_str(space, all[i]) +
                            " leaves the enumerated domain";
                ok.witness = std::make_pair(all[i], all[i]);
                return ok;
            }
        }
        return ok;
    }

    // Norm-preserving case: each sphere maps into itself, distances across
    // different spheres equal the larger norm on both sides, so per-sphere
    // checks are complete.
    const Rational lo_all = smallest_value(space);
    for (std::size_t k = 0; k < radii.size(); ++k) {
        if (pts[k].size() <= kAllPairsSphereLimit) {
            if (auto bad = check_all_pairs(space, pts[k], imgs[k])) return *bad;
            std::unordered_map<std::string, std::size_t> seen;
            for (std::size_t i = 0; i < pts[k].size(); ++i) {
                auto [it, fresh] =
                    seen.emplace(fine_key(space, imgs[k][i], spec.depth), i);
                if (!fresh)
                    return fail_pair(space, pts[k][it->second], pts[k][i],
                                     imgs[k][it->second], imgs[k][i],
                                     "map is not injective on the sphere");
            }
        } else {
            auto levels = space.value_set(lo_all, radii[k]);
            if (!space.is_finite()) {
                // The enumeration resolution itself, so that the finest level
                // partitions the sphere into single residues: its injectivity
                // check is exactly bijectivity of the induced quotient map.
                levels.insert(levels.begin(),
                              radii[k] *
                                  rat_prime_power(space.field().desc().p, -spec.depth));
            }
            if (auto bad = check_sphere_levels(space, pts[k], imgs[k], levels))
                return *bad;
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Linearity
// ---------------------------------------------------------------------------

bool certificate_holds(const Space& space, const PointFn& fn,
                       const NonlinearityCertificate& cert) {
    if (cert.homogeneity) {
        const Point lhs = fn(space.scalar_mul(cert.lambda, cert.x));
        const Point rhs = space.scalar_mul(cert.lambda, fn(cert.x));
        return !(lhs == rhs);
    }
    const Point lhs = fn(space.add(cert.x, cert.y));
    const Point rhs = space.add(fn(cert.x), fn(cert.y));
    return !(lhs == rhs);
}

LinearityReport is_linear(const Space& space, const PointFn& fn,
                          const EnumerationSpec& spec, std::uint64_t seed) {
    LinearityReport report;
    const auto pts = domain_points(space, spec);

    auto check_add = [&](const Point& x, const Point& y) -> bool {
        const Point lhs = fn(space.add(x, y));
        const Point rhs = space.add(fn(x), fn(y));
        if (lhs == rhs) return true;
        report.linear = false;
        report.cert = NonlinearityCertificate{false, x, y, space.field().zero()};
        return false;
    };
    auto check_scale = [&](const FieldElement& lambda, const Point& x) -> bool {
        try {
            const Point lhs = fn(space.scalar_mul(lambda, x));
            const Point rhs = space.scalar_mul(lambda, fn(x));
            if (lhs == rhs) return true;
        } catch (const ValuationOverflow&) {
            return true; // scaled point not representable; skip the sample
        }
        report.linear = false;
        report.cert = NonlinearityCertificate{true, x, space.zero_point(), lambda};
        return false;
    };

    if (space.is_finite()) {
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i; j < pts.size(); ++j)
                if (!check_add(pts[i], pts[j])) return report;
        for (const auto& lambda : space.field().all_elements())
            for (const auto& x : pts)
                if (!check_scale(lambda, x)) return report;
        return report;
    }

    Prng rng(seed);
    const std::size_t pair_samples = std::min<std::size_t>(2048, pts.size() * pts.size());
    for (std::size_t s = 0; s < pair_samples; ++s) {
        const auto& x = pts[rng.below(pts.size())];
        const auto& y = pts[rng.below(pts.size())];
        if (!check_add(x, y)) return report;
    }
    std::vector<FieldElement> scalars;
    scalars.push_back(space.field().one());
    scalars.push_back(space.field().neg(space.field().one()));
    scalars.push_back(space.field().p_power(1));
    scalars.push_back(space.field().p_power(-1));
    for (int i = 0; i < 4; ++i) scalars.push_back(space.field().random_unit(rng));
    for (const auto& lambda : scalars) {
        const std::size_t n = std::min<std::size_t>(128, pts.size());
        for (std::size_t s = 0; s < n; ++s)
            if (!check_scale(lambda, pts[rng.below(pts.size())])) return report;
    }
    return report;
}

LinearityReport is_affine(const Space& space, const PointFn& fn,
                          const EnumerationSpec& spec, std::uint64_t seed) {
    const Point offset = fn(space.zero_point());
    return is_linear(
        space, [&](const Point& x) { return space.sub(fn(x), offset); }, spec, seed);
}

// ---------------------------------------------------------------------------
// Factoring
// ---------------------------------------------------------------------------

namespace {

std::optional<SphereAction> factor_one_sphere(const Space& space, const Rational& r,
                                              const PointFn& fn,
                                              std::span<const Rational> radii_below,
                                              int depth_left, int res_depth);

TreeNodePtr factor_node(const Space& space, const PointFn& fn,
                        std::span<const Rational> radii, int depth_left, int res_depth) {
    auto node = std::make_shared<TreeNode>();
    for (std::size_t k = radii.size(); k-- > 0;) {
        const Rational& r = radii[k];
        auto action =
            factor_one_sphere(space, r, fn, radii.first(k), depth_left, res_depth);
        if (action) node->spheres.emplace(r, std::move(*action));
    }
    return node->spheres.empty() ? nullptr : node;
}

std::optional<SphereAction> factor_one_sphere(const Space& space, const Rational& r,
                                              const PointFn& fn,
                                              std::span<const Rational> radii_below,
                                              int depth_left, int res_depth) {
    auto dec = decompose_sphere(space, r);
    if (dec->classes.empty()) return std::nullopt;
    if (depth_left <= 0)
        throw DepthExhausted("factoring radius " + rat_str(r) +
                             " requires a deeper tree");
    SphereAction action;
    action.maps.resize(dec->classes.size());
    bool trivial = true;
    for (std::size_t i = 0; i < dec->classes.size(); ++i) {
        const Point& rep = dec->classes[i].rep;
        const Point t = fn(rep);
        const std::size_t j = class_index_of(space, *dec, t);
        auto child_fn = [&space, &fn, &rep, &t](const Point& u) {
            return space.sub(fn(space.add(rep, u)), t);
        };
        TreeNodePtr child;
        if (!radii_below.empty()) {
            if (depth_left <= 1) {
                // No budget for a child: it must act as the identity at the
                // working resolution, which we check rather than assume.
                for (const auto& r2 : radii_below)
                    for (const auto& u : sphere_points(space, r2, res_depth))
                        if (!same_at_resolution(space, child_fn(u), u, res_depth))
                            throw DepthExhausted(
                                "factoring radius " + rat_str(r) +
                                " requires a child action at radius " + rat_str(r2));
            } else {
                child = factor_node(space, child_fn, radii_below, depth_left - 1,
                                    res_depth);
            }
        }
        if (j != i || !(t == dec->classes[j].rep) || child) trivial = false;
        action.maps[i] = BallMap{j, t, std::move(child)};
    }
    if (trivial) return std::nullopt;
    return action;
}

} // namespace

Isometry factor_isometry(const Space& space, const PointFn& fn,
                         const EnumerationSpec& spec, int depth) {
    if (!space.is_zero(fn(space.zero_point())))
        throw DomainError("map is not centred: 0 does not map to 0");
    auto check = verify_isometry(space, fn, spec);
    if (!check.pass) throw DomainError("map is not an isometry; " + check.reason);
    const auto radii = domain_radii(space, spec);
    Isometry iso{space, factor_node(space, fn, radii, depth, spec.depth), 0};
    iso.depth = std::max(structural_depth(iso.root), 1);
    return iso;
}

TreeNodePtr canonicalize(const Space& space, const TreeNodePtr& node) {
    if (!node) return nullptr;
    auto out = std::make_shared<TreeNode>();
    out->leaf = node->leaf;
    out->scalar = node->scalar;
    out->matrix = node->matrix;
    if (out->leaf == LeafKind::Scalar && space.field().is_one(out->scalar))
        out->leaf = LeafKind::Identity;
    if (out->leaf == LeafKind::Negation && space.field().characteristic() == 2)
        out->leaf = LeafKind::Identity;
    if (out->leaf == LeafKind::Matrix && *out->matrix == identity_matrix(space)) {
        out->leaf = LeafKind::Identity;
        out->matrix.reset();
    }
    if (out->leaf != LeafKind::Matrix) out->matrix.reset();
    if (out->leaf != LeafKind::Scalar) out->scalar = FieldElement{};

    for (const auto& [r, action] : node->spheres) {
        auto dec = decompose_sphere(space, r);
        SphereAction cleaned;
        cleaned.maps.reserve(action.maps.size());
        bool trivial = out->leaf == LeafKind::Identity;
        for (std::size_t i = 0; i < action.maps.size(); ++i) {
            BallMap bm = action.maps[i];
            bm.child = canonicalize(space, bm.child);
            if (bm.child && bm.child->spheres.empty() &&
                bm.child->leaf == LeafKind::Identity)
                bm.child = nullptr;
            if (bm.target != i || !(bm.anchor == dec->classes[i].rep) || bm.child)
                trivial = false;
            cleaned.maps.push_back(std::move(bm));
        }
        if (!trivial) out->spheres.emplace(r, std::move(cleaned));
    }
    if (out->spheres.empty() && out->leaf == LeafKind::Identity) return nullptr;
    return out;
}

Isometry canonicalized(const Isometry& iso) {
    return Isometry{iso.space, canonicalize(iso.space, iso.root), iso.depth};
}

// ---------------------------------------------------------------------------
// Dilation transport
// ---------------------------------------------------------------------------

namespace {

TreeNodePtr scale_node(const Space& space, const TreeNodePtr& node, int e);

// Conjugation of a sphere action by the scalar p^e: x |-> p^e f(x / p^e).
// Multiplication by p^e shifts digit positions, so it carries canonical class
// representatives onto canonical class representatives; the transported tree
// is exact, with every leaf unchanged (scalars are central).
SphereAction scale_action(const Space& space, const Rational& r,
                          const SphereAction& action, int e) {
    if (e == 0) return action;
    const FieldElement alpha = space.field().p_power(e);
    const Rational r2 = r * rat_prime_power(space.field().desc().p, -e);
    const auto src = decompose_sphere(space, r);
    const auto dst = decompose_sphere(space, r2);
    SphereAction out;
    out.maps.resize(action.maps.size());
    for (std::size_t i = 0; i < action.maps.size(); ++i) {
        const std::size_t from =
            class_index_of(space, *dst,
                           space.scalar_mul(alpha, src->classes[i].rep));
        const Point anchor = space.scalar_mul(alpha, action.maps[i].anchor);
        out.maps[from] = BallMap{class_index_of(space, *dst, anchor), anchor,
                                 scale_node(space, action.maps[i].child, e)};
    }
    return out;
}

TreeNodePtr scale_node(const Space& space, const TreeNodePtr& node, int e) {
    if (!node || e == 0) return node;
    auto out = std::make_shared<TreeNode>();
    out->leaf = node->leaf;
    out->scalar = node->scalar;
    out->matrix = node->matrix;
    const Rational scale = rat_prime_power(space.field().desc().p, -e);
    for (const auto& [r, action] : node->spheres)
        out->spheres.emplace(r * scale, scale_action(space, r, action, e));
    return out;
}

bool has_leaf_shortcut(const TreeNodePtr& node) {
    if (!node) return false;
    if (node->leaf != LeafKind::Identity) return true;
    for (const auto& [r, action] : node->spheres)
        for (const auto& bm : action.maps)
            if (has_leaf_shortcut(bm.child)) return true;
    return false;
}

void collect_radii(const TreeNodePtr& node, std::vector<Rational>& out) {
    if (!node) return;
    for (const auto& [r, action] : node->spheres) {
        out.push_back(r);
        for (const auto& bm : action.maps) collect_radii(bm.child, out);
    }
}

} // namespace

SphereAction dilation_transport(const Space& space, const Rational& r,
                                const SphereAction& action, const FieldElement& alpha,
                                int depth) {
    if (space.field().is_zero(alpha)) throw DomainError("alpha must be nonzero");
    const Rational a = space.field().abs_value(alpha);
    const Rational r2 = a * r;
    const auto values = space.value_set_all();
    if (!std::binary_search(values.begin(), values.end(), r2))
        throw DomainError("|alpha| r = " + rat_str(r2) + " is not an attainable norm");

    const int e = space.is_finite() ? 0 : alpha.valuation;
    FieldElement unit = alpha;
    if (!space.is_finite()) unit.valuation = 0;
    SphereAction scaled = scale_action(space, r, action, e);
    if (space.field().is_one(unit)) return scaled;

    // Conjugation by a unit keeps the sphere; it is materialized by
    // refactoring over the radii the action actually touches. Leaf shortcuts
    // act on every sphere at once and cannot be refactored over a finite
    // radius list, so they are rejected here.
    bool leafy = false;
    for (const auto& bm : scaled.maps) leafy = leafy || has_leaf_shortcut(bm.child);
    if (leafy)
        throw DomainError("transport by a scalar with a nontrivial unit part is only "
                          "supported for actions without leaf shortcuts");
    const FieldElement unit_inv = space.field().inv(unit);
    PointFn fn = [&](const Point& y) {
        const Point x = space.scalar_mul(unit_inv, y);
        return space.scalar_mul(unit, apply_sphere_action(space, r2, scaled, x, 64));
    };
    std::vector<Rational> below;
    for (const auto& bm : scaled.maps) collect_radii(bm.child, below);
    std::sort(below.begin(), below.end());
    below.erase(std::unique(below.begin(), below.end()), below.end());
    auto out = factor_one_sphere(space, r2, fn, below, std::max(depth, 1), depth);
    if (out) return *out;
    auto dec = decompose_sphere(space, r2);
    SphereAction id;
    id.maps.resize(dec->classes.size());
    for (std::size_t i = 0; i < dec->classes.size(); ++i)
        id.maps[i] = BallMap{i, dec->classes[i].rep, nullptr};
    return id;
}

// ---------------------------------------------------------------------------
// Random trees
// ---------------------------------------------------------------------------

namespace {

TreeNodePtr random_node(const Space& space, Prng& rng,
                        std::span<const Rational> radii, int depth_left,
                        const EnumerationSpec& spec) {
    auto node = std::make_shared<TreeNode>();
    const std::uint64_t leaf_roll = rng.below(8);
    if (leaf_roll == 0) {
        node->leaf = LeafKind::Negation;
    } else if (leaf_roll == 1) {
        node->leaf = LeafKind::Scalar;
        node->scalar = space.field().random_unit(rng);
    }
    if (depth_left > 0 && !radii.empty()) {
        const std::size_t want = 1 + rng.below(std::min<std::uint64_t>(3, radii.size()));
        std::vector<std::size_t> order(radii.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.below(i)]);
        order.resize(want);
        std::sort(order.begin(), order.end());
        for (const std::size_t idx : order) {
            const Rational& r = radii[idx];
            auto dec = decompose_sphere(space, r);
            const std::size_t k = dec->classes.size();
            if (k == 0) continue;
            std::vector<std::size_t> sigma(k);
            for (std::size_t i = 0; i < k; ++i) sigma[i] = i;
            for (std::size_t i = k; i > 1; --i)
                std::swap(sigma[i - 1], sigma[rng.below(i)]);
            std::vector<TreeNodePtr> children(k);
            std::vector<std::optional<Point>> anchors(k);
            for (std::size_t i = 0; i < k; ++i) {
                if (depth_left > 1 && idx > 0 && rng.coin(3, 8))
                    children[i] = random_node(space, rng, radii.first(idx),
                                              depth_left - 1, spec);
                if (rng.coin(1, 4) && idx > 0) {
                    const Rational& rd = radii[rng.below(idx)];
                    auto shift = sphere_points(space, rd, std::min(spec.depth, 1));
                    if (!shift.empty()) {
                        const Point& delta = shift[rng.below(shift.size())];
                        anchors[i] = space.add(dec->classes[sigma[i]].rep, delta);
                    }
                }
            }
            node->spheres.emplace(
                r, build_sphere_action(space, r, sigma, std::move(children), anchors));
        }
    }
    if (node->spheres.empty() && node->leaf == LeafKind::Identity) return nullptr;
    return node;
}

} // namespace

std::vector<Rational> tree_radii(const Isometry& iso) {
    std::vector<Rational> radii;
    collect_radii(iso.root, radii);
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
    return radii;
}

Isometry random_isometry(const Space& space, const EnumerationSpec& spec, int depth,
                         std::uint64_t seed) {
    Prng rng(seed);
    std::vector<Rational> radii;
    for (const auto& r : domain_radii(space, spec))
        if (!decompose_sphere(space, r)->classes.empty()) radii.push_back(r);
    Isometry iso{space, random_node(space, rng, radii, depth, spec), depth};
    validate_tree(iso);
    return iso;
}

} // namespace ultra
