#include "ultraiso/constructions.hpp"

#include <algorithm>

#include "ultraiso/errors.hpp"

namespace ultra {

namespace {

Isometry identity_iso(const Space& space, int depth) {
    return Isometry{space, nullptr, depth};
}

void must_verify(const Space& space, const Isometry& iso, const EnumerationSpec& spec,
                 const std::string& what) {
    const VerifyResult res = verify_isometry(space, as_fn(iso), spec);
    if (!res.pass) throw DomainError(what + " failed verification; " + res.reason);
}

Point first_sphere_point(const Space& space, const Rational& r) {
    const auto dec = decompose_sphere(space, r);
    if (dec->classes.empty())
        throw DomainError("the sphere of radius " + rat_str(r) + " is empty");
    return dec->classes.front().rep;
}

std::vector<Point> sorted_points(const Space& space) {
    auto pts = space.all_points();
    std::sort(pts.begin(), pts.end(), point_less);
    return pts;
}

PointFn swap_two(const Space& space, Point a, Point b) {
    return [space, a = std::move(a), b = std::move(b)](const Point& z) {
        if (z == a) return b;
        if (z == b) return a;
        return z;
    };
}

NonlinearityCertificate scan_additivity(const Space& space, const PointFn& fn,
                                        const std::vector<Point>& pts) {
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i; j < pts.size(); ++j) {
            NonlinearityCertificate cert{false, pts[i], pts[j], space.field().zero()};
            if (certificate_holds(space, fn, cert)) return cert;
        }
    throw DomainError("internal: expected nonlinear map has no additivity certificate");
}

ClassificationResult witness_result(const Space& space, std::string case_name,
                                    Isometry witness, NonlinearityCertificate cert,
                                    const EnumerationSpec& check_spec) {
    must_verify(space, witness, check_spec, case_name);
    if (!certificate_holds(space, as_fn(witness), cert))
        throw DomainError("internal: certificate does not hold for " + case_name);
    if (space.is_finite() &&
        is_linear(space, as_fn(witness), full_spec(space)).linear)
        throw DomainError("internal: witness for " + case_name + " is linear");
    ClassificationResult res;
    res.all_linear = false;
    res.case_name = std::move(case_name);
    res.witness = std::move(witness);
    res.certificate = std::move(cert);
    return res;
}

} // namespace

Isometry sphere_flip(const Space& space, const Rational& r, int depth) {
    const auto dec = decompose_sphere(space, r);
    if (dec->classes.empty())
        throw DomainError("the sphere of radius " + rat_str(r) + " is empty");
    if (space.field().characteristic() == 2) return identity_iso(space, depth);

    const std::size_t k = dec->classes.size();
    auto negation = std::make_shared<TreeNode>();
    negation->leaf = LeafKind::Negation;
    std::vector<std::size_t> sigma(k);
    std::vector<TreeNodePtr> children(k);
    std::vector<std::optional<Point>> anchors(k);
    for (std::size_t i = 0; i < k; ++i) {
        const Point image = space.neg(dec->classes[i].rep);
        sigma[i] = class_index_of(space, *dec, image);
        anchors[i] = image;
        children[i] = negation;
    }
    std::map<Rational, SphereAction> actions;
    actions.emplace(r, build_sphere_action(space, r, sigma, std::move(children), anchors));
    Isometry iso = glue_spheres(space, std::move(actions), std::nullopt, depth);
    must_verify(space, iso, EnumerationSpec{r, r, depth}, "sphere flip");
    return iso;
}

Isometry sphere_translate(const Space& space, const Rational& r, const Point& x0,
                          int depth) {
    space.check_point(x0);
    const Rational shift_norm = space.norm(x0);
    if (shift_norm >= r)
        throw DomainError("translation vector has norm " + rat_str(shift_norm) +
                          ", which is not below the sphere radius " + rat_str(r));
    if (space.is_zero(x0)) return identity_iso(space, depth);
    const auto dec = decompose_sphere(space, r);
    if (dec->classes.empty())
        throw DomainError("the sphere of radius " + rat_str(r) + " is empty");

    const std::size_t k = dec->classes.size();
    std::vector<std::size_t> sigma(k);
    std::vector<TreeNodePtr> children(k);
    std::vector<std::optional<Point>> anchors(k);
    for (std::size_t i = 0; i < k; ++i) {
        sigma[i] = i; // |x0| < r keeps every class in place
        anchors[i] = space.add(dec->classes[i].rep, x0);
    }
    std::map<Rational, SphereAction> actions;
    actions.emplace(r, build_sphere_action(space, r, sigma, std::move(children), anchors));
    Isometry iso = glue_spheres(space, std::move(actions), std::nullopt, depth);
    must_verify(space, iso, EnumerationSpec{r, r, depth}, "sphere translate");
    return iso;
}

Isometry transitivity_witness(const Space& space, const Point& x, const Point& y,
                              int depth) {
    space.check_point(x);
    space.check_point(y);
    const Rational r = space.norm(x);
    if (r != space.norm(y))
        throw DomainError("norms differ: " + rat_str(r) + " vs " +
                          rat_str(space.norm(y)));
    if (r == 0) throw DomainError("transitivity witness needs nonzero vectors");
    if (x == y) return identity_iso(space, depth);

    const auto dec = decompose_sphere(space, r);
    const std::size_t ix = class_index_of(space, *dec, x);
    const std::size_t iy = class_index_of(space, *dec, y);
    const Point delta = space.sub(y, x);

    const std::size_t k = dec->classes.size();
    std::vector<std::size_t> sigma(k);
    std::vector<TreeNodePtr> children(k);
    std::vector<std::optional<Point>> anchors(k);
    for (std::size_t i = 0; i < k; ++i) sigma[i] = i;
    if (ix == iy) {
        anchors[ix] = space.add(dec->classes[ix].rep, delta);
    } else {
        sigma[ix] = iy;
        sigma[iy] = ix;
        anchors[ix] = space.add(dec->classes[ix].rep, delta);
        anchors[iy] = space.sub(dec->classes[iy].rep, delta);
    }
    std::map<Rational, SphereAction> actions;
    actions.emplace(r, build_sphere_action(space, r, sigma, std::move(children), anchors));
    Isometry iso = glue_spheres(space, std::move(actions), std::nullopt, depth);
    if (!(apply(iso, x) == y))
        throw DomainError("internal: transitivity witness misses its target");
    must_verify(space, iso, EnumerationSpec{r, r, depth}, "transitivity witness");
    return iso;
}

ClassificationResult classify(const Space& space, int depth) {
    const auto values = space.value_set_all();

    if (!space.is_finite()) {
        // The valuation is nontrivial, so the norm takes infinitely many
        // values; the witness is built over the enumerable window.
        if (values.size() < 3)
            throw DomainError(
                "the valuation window shows fewer than three norm values; widen it");
        const Rational v0 = values[values.size() - 3];
        const Rational v1 = values[values.size() - 2];
        const Rational v2 = values.back();
        const Point x0 = first_sphere_point(space, v0);
        Isometry witness = sphere_translate(space, v1, x0, depth);
        NonlinearityCertificate cert{false, first_sphere_point(space, v2),
                                     first_sphere_point(space, v1),
                                     space.field().zero()};
        return witness_result(space, "nontrivial valuation, middle sphere translate",
                              std::move(witness), std::move(cert),
                              EnumerationSpec{v0, v2, depth});
    }

    const int tree_depth = static_cast<int>(values.size()) + 1;
    const EnumerationSpec whole = full_spec(space, depth);
    const auto pts = sorted_points(space);
    const std::uint64_t count = space.point_count();

    if (values.size() == 1) {
        // Trivial norm: every centred bijection is an isometry.
        if (count > 4) {
            Point x1, x2;
            bool have1 = false, have2 = false;
            for (const auto& p : pts) {
                if (space.is_zero(p)) continue;
                if (!have1) {
                    x1 = p;
                    have1 = true;
                    continue;
                }
                if (!(p == x1) && !space.is_zero(space.add(x1, p))) {
                    x2 = p;
                    have2 = true;
                    break;
                }
            }
            if (!have2) throw DomainError("internal: no swap pair found");
            const Point x3 = space.add(x1, x2);
            Point x4;
            for (const auto& p : pts)
                if (!space.is_zero(p) && !(p == x1) && !(p == x2) && !(p == x3)) {
                    x4 = p;
                    break;
                }
            PointFn fn = swap_two(space, x3, x4);
            Isometry witness = factor_isometry(space, fn, whole, tree_depth);
            NonlinearityCertificate cert{false, x1, x2, space.field().zero()};
            return witness_result(space, "trivial norm, more than four elements",
                                  std::move(witness), std::move(cert), whole);
        }
        if (space.field().desc().q == 4) {
            // The four-element field: fix 0 and u, permute xu and x^2 u.
            const Point u = first_sphere_point(space, values[0]);
            FieldElement xe;
            xe.index = 2;
            const Point a = space.scalar_mul(xe, u);
            const Point b = space.scalar_mul(space.field().mul(xe, xe), u);
            PointFn fn = swap_two(space, a, b);
            Isometry witness = factor_isometry(space, fn, whole, tree_depth);
            NonlinearityCertificate cert{true, u, space.zero_point(), xe};
            return witness_result(space, "four-element field, unit permutation",
                                  std::move(witness), std::move(cert), whole);
        }
        ClassificationResult res;
        res.all_linear = true;
        res.case_name = "trivial norm, at most four elements";
        return res;
    }

    if (values.size() == 2) {
        const Rational v0 = values[0];
        const Rational v1 = values[1];
        if (space.field().characteristic() != 2) {
            Isometry witness = sphere_flip(space, v0, tree_depth);
            NonlinearityCertificate cert{false, first_sphere_point(space, v1),
                                         first_sphere_point(space, v0),
                                         space.field().zero()};
            return witness_result(space, "two norm values, lower sphere sign flip",
                                  std::move(witness), std::move(cert), whole);
        }
        // characteristic 2: X1 = closed lower ball, a trivially normed subspace
        std::size_t lower_dims = 0;
        for (const auto& w : space.weights())
            if (w == v0) ++lower_dims;
        std::uint64_t lower_count = 1;
        for (std::size_t i = 0; i < lower_dims; ++i) lower_count *= space.field().desc().q;

        if (lower_count > 4) {
            // The swap construction inside X1, extended by the identity.
            std::vector<Point> lower;
            for (const auto& p : pts)
                if (space.norm(p) <= v0 && !space.is_zero(p)) lower.push_back(p);
            const Point x1 = lower[0];
            Point x2;
            for (const auto& p : lower)
                if (!(p == x1) && !space.is_zero(space.add(x1, p))) {
                    x2 = p;
                    break;
                }
            const Point x3 = space.add(x1, x2);
            Point x4;
            for (const auto& p : lower)
                if (!(p == x1) && !(p == x2) && !(p == x3)) {
                    x4 = p;
                    break;
                }
            PointFn fn = swap_two(space, x3, x4);
            Isometry witness = factor_isometry(space, fn, whole, tree_depth);
            NonlinearityCertificate cert{false, x1, x2, space.field().zero()};
            return witness_result(space,
                                  "characteristic 2, lower ball above four elements",
                                  std::move(witness), std::move(cert), whole);
        }
        if (space.field().desc().q == 4) {
            // X1 is a copy of the four-element field: permute its units.
            const Point u = first_sphere_point(space, v0);
            FieldElement xe;
            xe.index = 2;
            const Point a = space.scalar_mul(xe, u);
            const Point b = space.scalar_mul(space.field().mul(xe, xe), u);
            PointFn fn = swap_two(space, a, b);
            Isometry witness = factor_isometry(space, fn, whole, tree_depth);
            NonlinearityCertificate cert{true, u, space.zero_point(), xe};
            return witness_result(space,
                                  "characteristic 2, lower ball is the four-element field",
                                  std::move(witness), std::move(cert), whole);
        }
        // q == 2
        if (space.dim() >= 3) {
            const Point x1 = first_sphere_point(space, v0);
            const Point z = first_sphere_point(space, v1);
            PointFn fn = swap_two(space, z, space.add(z, x1));
            Isometry witness = factor_isometry(space, fn, whole, tree_depth);
            NonlinearityCertificate cert = scan_additivity(space, fn, pts);
            return witness_result(space, "characteristic 2, twin swap in dimension >= 3",
                                  std::move(witness), std::move(cert), whole);
        }
        ClassificationResult res;
        res.all_linear = true;
        res.case_name = "two-dimensional space over the two-element field";
        return res;
    }

    // Three or more norm values: translate the second sphere by a smaller vector.
    const Rational v0 = values[0];
    const Rational v1 = values[1];
    const Rational v2 = values[2];
    const Point x0 = first_sphere_point(space, v0);
    Isometry witness = sphere_translate(space, v1, x0, tree_depth);
    NonlinearityCertificate cert{false, first_sphere_point(space, v2),
                                 first_sphere_point(space, v1), space.field().zero()};
    return witness_result(space, "three norm values, middle sphere translate",
                          std::move(witness), std::move(cert), whole);
}

// ---------------------------------------------------------------------------
// Folding a sphere family into the unit ball
// ---------------------------------------------------------------------------

int interleave_exponent(int n) { return n == 0 ? 0 : (n > 0 ? 2 * n : -2 * n - 1); }

int uninterleave_exponent(int j) { return j % 2 == 0 ? j / 2 : -(j + 1) / 2; }

namespace {

void require_unit_weights_padic(const Space& space) {
    if (space.is_finite())
        throw DomainError("folding needs a p-adic space");
    for (const auto& w : space.weights())
        if (w != 1)
            throw DomainError("folding needs unit weights so the value group is the "
                              "powers of p");
}

SphereAction identity_action(const Space& space, const Rational& r) {
    const auto dec = decompose_sphere(space, r);
    SphereAction a;
    a.maps.resize(dec->classes.size());
    for (std::size_t i = 0; i < dec->classes.size(); ++i)
        a.maps[i] = BallMap{i, dec->classes[i].rep, nullptr};
    return a;
}

} // namespace

Isometry fold_sphere_family(const Space& space, const std::map<int, SphereAction>& family,
                            int depth) {
    require_unit_weights_padic(space);
    const unsigned p = space.field().desc().p;
    std::map<Rational, SphereAction> actions;
    for (const auto& [n, action] : family) {
        const int j = interleave_exponent(n);
        const Rational source = rat_prime_power(p, n);
        const Rational target = rat_prime_power(p, -(j + 1));
        // p^(j+1+n) scales the source sphere exactly onto its slot.
        const FieldElement alpha = space.field().p_power(j + 1 + n);
        actions.emplace(target, dilation_transport(space, source, action, alpha, depth));
    }
    return glue_spheres(space, std::move(actions), Rational(1), depth);
}

std::map<int, SphereAction> unfold_sphere_family(const Space& space,
                                                 const Isometry& folded, int exp_min,
                                                 int exp_max, int depth) {
    require_unit_weights_padic(space);
    const unsigned p = space.field().desc().p;
    std::map<int, SphereAction> family;
    for (int n = exp_min; n <= exp_max; ++n) {
        const int j = interleave_exponent(n);
        const Rational slot = rat_prime_power(p, -(j + 1));
        SphereAction packed = identity_action(space, slot);
        if (folded.root) {
            auto it = folded.root->spheres.find(slot);
            if (it != folded.root->spheres.end()) packed = it->second;
        }
        const FieldElement alpha = space.field().p_power(-(j + 1 + n));
        family.emplace(n, dilation_transport(space, slot, packed, alpha, depth));
    }
    return family;
}

} // namespace ultra
