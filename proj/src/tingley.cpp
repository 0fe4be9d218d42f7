#include "ultraiso/tingley.hpp"

#include <algorithm>
#include <set>

#include "ultraiso/errors.hpp"

namespace ultra {

namespace {

std::string sphere_key(const Space& space, const Point& x, const Rational& r, int depth) {
    const Rational rho =
        space.is_finite()
            ? space.value_set_all().front()
            : r * rat_prime_power(space.field().desc().p, -depth);
    return residue_key(space, x, rho <= r ? rho : r);
}

// Distance levels that matter between the two spaces: the union of the
// attainable values of both sides up to the sphere radii, plus the residue
// resolution itself. Distances take values in this set, so agreeing on every
// "< level" relation means agreeing exactly.
std::vector<Rational> cross_levels(const Space& X, const Space& Y, const Rational& r,
                                   const Rational& r_prime, int depth) {
    std::set<Rational> levels;
    for (const auto& v : X.value_set(Rational(0), r)) levels.insert(v);
    for (const auto& v : Y.value_set(Rational(0), r_prime)) levels.insert(v);
    if (!X.is_finite())
        levels.insert(r * rat_prime_power(X.field().desc().p, -depth));
    return {levels.begin(), levels.end()};
}

// Partition refinement across two spaces: x-side cells keyed in X at level v,
// image cells keyed in Y at level v * (r_prime / r) so the ladders align.
std::optional<std::pair<std::size_t, std::size_t>> cross_level_violation(
    const Space& X, const Space& Y, const std::vector<Point>& xs,
    const std::vector<Point>& ys, const Rational& v, const Rational& scale) {
    const KeyPlan src_plan = make_key_plan(X, v);
    const KeyPlan dst_plan = make_key_plan(Y, v * scale);
    std::unordered_map<std::string, std::pair<std::string, std::size_t>> cell_img;
    std::unordered_map<std::string, std::size_t> img_owner;
    std::string src, dst;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        src.clear();
        dst.clear();
        append_residue_key(X, src_plan, xs[i], src);
        append_residue_key(Y, dst_plan, ys[i], dst);
        auto [it, inserted] = cell_img.emplace(src, std::make_pair(dst, i));
        if (!inserted && it->second.first != dst)
            return std::make_pair(it->second.second, i);
        auto [oit, fresh] = img_owner.emplace(dst, i);
        if (!fresh) {
            std::string other;
            append_residue_key(X, src_plan, xs[oit->second], other);
            if (other != src) return std::make_pair(oit->second, i);
        }
    }
    return std::nullopt;
}

} // namespace

std::string obstruction_kind_name(ObstructionKind kind) {
    switch (kind) {
    case ObstructionKind::TrivialValuationSingleton: return "trivial_valuation";
    case ObstructionKind::RadiusMismatch: return "radius_mismatch";
    case ObstructionKind::ValueSetMismatch: return "value_set_mismatch";
    }
    return "unknown";
}

SpecCheck verify_sphere_spec(const SphereIsometrySpec& spec) {
    const Space& X = spec.domain;
    const Space& Y = spec.codomain;
    if (!(X.field().desc() == Y.field().desc()))
        return {false, "domain and codomain must share the scalar field"};
    if (spec.pairs.empty()) return {false, "empty sphere map"};

    const auto expected = sphere_points(X, spec.r, spec.depth);
    if (spec.pairs.size() != expected.size())
        return {false, "map lists " + std::to_string(spec.pairs.size()) +
                           " points, the sphere has " + std::to_string(expected.size()) +
                           " residues at depth " + std::to_string(spec.depth)};

    std::set<std::string> src_seen, dst_seen;
    for (const auto& [x, y] : spec.pairs) {
        X.check_point(x);
        Y.check_point(y);
        if (X.norm(x) != spec.r)
            return {false, "domain point " + point_str(X, x) + " is not on the sphere"};
        if (Y.norm(y) != spec.r_prime)
            return {false, "image " + point_str(Y, y) + " is not on the target sphere"};
        if (!src_seen.insert(sphere_key(X, x, spec.r, spec.depth)).second)
            return {false, "duplicate domain residue " + point_str(X, x)};
        if (!dst_seen.insert(sphere_key(Y, y, spec.r_prime, spec.depth)).second)
            return {false, "two points share the image residue of " + point_str(Y, y)};
    }

    std::vector<Point> xs, ys;
    xs.reserve(spec.pairs.size());
    for (const auto& [x, y] : spec.pairs) {
        xs.push_back(x);
        ys.push_back(y);
    }
    if (spec.pairs.size() <= 300) {
        for (std::size_t i = 0; i < xs.size(); ++i)
            for (std::size_t j = i + 1; j < xs.size(); ++j)
                if (X.distance(xs[i], xs[j]) != Y.distance(ys[i], ys[j]))
                    return {false, "distances of " + point_str(X, xs[i]) + ", " +
                                       point_str(X, xs[j]) + " are not preserved"};
        return {};
    }
    const Rational scale = spec.r_prime / spec.r;
    for (const auto& v : cross_levels(X, Y, spec.r, spec.r_prime, spec.depth))
        if (auto bad = cross_level_violation(X, Y, xs, ys, v, scale))
            return {false, "distances of " + point_str(X, xs[bad->first]) + ", " +
                               point_str(X, xs[bad->second]) + " are not preserved"};
    return {};
}

std::optional<Obstruction> extension_obstruction(const Space& X, const Space& Y,
                                                 const Rational& r,
                                                 const Rational& r_prime) {
    if (decompose_sphere(X, r)->classes.empty() ||
        decompose_sphere(Y, r_prime)->classes.empty())
        throw DomainError("extension_obstruction needs nonempty spheres");
    if (!X.field().trivial_valuation()) return std::nullopt;

    if (r != r_prime) {
        // Report only when a sphere isometry actually exists despite r' != r.
        const auto sx = sphere_points(X, r, 0);
        const auto sy = sphere_points(Y, r_prime, 0);
        bool isometric = false;
        if (sx.size() == 1 && sy.size() == 1) {
            isometric = true;
        } else if (sx.size() == sy.size() && sx.size() <= 64) {
            // Small exhaustive matching on distance multisets.
            std::vector<std::size_t> perm(sy.size());
            for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
            do {
                bool good = true;
                for (std::size_t i = 0; i < sx.size() && good; ++i)
                    for (std::size_t j = i + 1; j < sx.size() && good; ++j)
                        good = X.distance(sx[i], sx[j]) ==
                               Y.distance(sy[perm[i]], sy[perm[j]]);
                if (good) {
                    isometric = true;
                    break;
                }
            } while (std::next_permutation(perm.begin(), perm.end()));
        }
        if (isometric)
            return Obstruction{ObstructionKind::RadiusMismatch,
                               "the spheres are isometric but r = " + rat_str(r) +
                                   " differs from r' = " + rat_str(r_prime)};
        return std::nullopt;
    }

    const auto vx = X.value_set_all();
    const auto vy = Y.value_set_all();
    if (vx != vy) {
        std::string detail = "value sets differ: {";
        for (std::size_t i = 0; i < vx.size(); ++i)
            detail += (i ? "," : "") + rat_str(vx[i]);
        detail += "} vs {";
        for (std::size_t i = 0; i < vy.size(); ++i)
            detail += (i ? "," : "") + rat_str(vy[i]);
        detail += "}";
        return Obstruction{ObstructionKind::ValueSetMismatch, detail};
    }
    return std::nullopt;
}

ExtensionResult extend_sphere_isometry(const SphereIsometrySpec& spec,
                                       std::optional<Point> x0,
                                       std::optional<FieldElement> alpha, int m) {
    const SpecCheck check = verify_sphere_spec(spec);
    if (!check.ok) throw DomainError("sphere map is not an isometry: " + check.reason);
    if (m < 0) throw DomainError("window exponent m must be >= 0");

    const Space& X = spec.domain;
    ExtensionResult result;

    if (X.field().trivial_valuation()) {
        if (spec.r != spec.r_prime) {
            result.obstruction =
                Obstruction{ObstructionKind::RadiusMismatch,
                            "trivial valuation with r = " + rat_str(spec.r) +
                                " but r' = " + rat_str(spec.r_prime)};
        } else if (auto obs = extension_obstruction(X, spec.codomain, spec.r,
                                                    spec.r_prime)) {
            result.obstruction = obs;
        } else {
            result.obstruction = Obstruction{
                ObstructionKind::TrivialValuationSingleton,
                "the valuation is trivial: no scalar with |alpha| > 1 exists"};
        }
        return result;
    }

    if (spec.r != spec.r_prime) {
        result.obstruction =
            Obstruction{ObstructionKind::RadiusMismatch,
                        "a sphere isometry over a non-trivially valued field forces "
                        "r' = r, got r = " + rat_str(spec.r) + ", r' = " +
                            rat_str(spec.r_prime)};
        return result;
    }

    GlobalExtension ext{spec, Point{}, Point{}, FieldElement{}, m, {}};
    for (const auto& [x, y] : spec.pairs)
        ext.table.emplace(sphere_key(X, x, spec.r, spec.depth), y);

    ext.x0 = x0 ? *x0 : decompose_sphere(X, spec.r)->classes.front().rep;
    auto it = ext.table.find(sphere_key(X, ext.x0, spec.r, spec.depth));
    if (it == ext.table.end())
        throw DomainError("x0 is not a tabulated point of the sphere");
    ext.tau_x0 = it->second;

    ext.alpha = alpha ? *alpha : X.field().p_power(-1);
    if (X.field().abs_value(ext.alpha) <= 1)
        throw DomainError("alpha must satisfy |alpha| > 1");

    result.extended = true;
    result.extension = std::move(ext);
    return result;
}

Point extension_apply(const GlobalExtension& ext, const Point& x) {
    const Space& X = ext.spec.domain;
    const Space& Y = ext.spec.codomain;
    const Rational nx = X.norm(x);
    if (nx == 0) return Y.zero_point();
    if (nx == ext.spec.r) {
        auto it = ext.table.find(sphere_key(X, x, ext.spec.r, ext.spec.depth));
        if (it == ext.table.end())
            throw DomainError("point " + point_str(X, x) +
                              " is finer than the tabulated sphere resolution");
        return it->second;
    }
    if (nx < ext.spec.r) {
        // tau(x + x0) - tau(x0): the open ball around x0 sits inside the sphere.
        const Point shifted = X.add(x, ext.x0);
        auto it = ext.table.find(sphere_key(X, shifted, ext.spec.r, ext.spec.depth));
        if (it == ext.table.end())
            throw DomainError("point " + point_str(X, x) +
                              " is finer than the tabulated sphere resolution");
        return Y.sub(it->second, ext.tau_x0);
    }
    // Outward shells: x with r a^(n-1) < |x| <= r a^n maps through the
    // alpha^n-dilation of the ball extension.
    const Rational a = X.field().abs_value(ext.alpha);
    Rational bound = ext.spec.r;
    int n = 0;
    while (bound < nx && n < ext.m) {
        bound *= a;
        ++n;
    }
    if (bound < nx)
        throw DomainError("norm " + rat_str(nx) + " is outside the certified window (m = " +
                          std::to_string(ext.m) + ")");
    FieldElement alpha_n = X.field().one();
    for (int i = 0; i < n; ++i) alpha_n = X.field().mul(alpha_n, ext.alpha);
    const Point inner = X.scalar_mul(X.field().inv(alpha_n), x);
    return Y.scalar_mul(alpha_n, extension_apply(ext, inner));
}

VerifyResult verify_extension(const GlobalExtension& ext, const Rational& lo,
                              const Rational& hi, int depth) {
    const Space& X = ext.spec.domain;
    const Space& Y = ext.spec.codomain;
    const unsigned p = X.field().desc().p;
    VerifyResult res;
    for (const auto& r : X.value_set(lo, hi)) {
        // Inside the sphere the extension is only determined on the quotient
        // at the tabulated resolution r0 * p^-k, so the check depth shrinks
        // with the radius. Shells scale onto the sphere itself and keep the
        // full tabulated depth.
        int d = std::min(depth, ext.spec.depth);
        if (r < ext.spec.r) {
            const Rational floor_rho =
                ext.spec.r * rat_prime_power(p, -ext.spec.depth);
            d = -1;
            while (d + 1 <= depth && r * rat_prime_power(p, -(d + 1)) >= floor_rho)
                ++d;
            if (d < 0)
                throw DomainError("window reaches below the tabulated resolution");
        }
        const auto pts = sphere_points(X, r, d);
        std::vector<Point> imgs;
        imgs.reserve(pts.size());
        for (const auto& x : pts) {
            imgs.push_back(extension_apply(ext, x));
            if (Y.norm(imgs.back()) != r) {
                res.pass = false;
                res.reason = "norm of " + point_str(X, x) + " is not preserved";
                res.witness = std::make_pair(X.zero_point(), x);
                return res;
            }
        }
        for (const auto& v : cross_levels(X, Y, r, r, d)) {
            if (auto bad = cross_level_violation(X, Y, pts, imgs, v, Rational(1))) {
                res.pass = false;
                res.witness = std::make_pair(pts[bad->first], pts[bad->second]);
                res.reason = "distance of " + point_str(X, pts[bad->first]) + ", " +
                             point_str(X, pts[bad->second]) + " changed from " +
                             rat_str(X.distance(pts[bad->first], pts[bad->second])) +
                             " to " +
                             rat_str(Y.distance(imgs[bad->first], imgs[bad->second]));
                return res;
            }
        }
    }
    return res;
}

bool extension_restricts_to_spec(const GlobalExtension& ext) {
    for (const auto& [x, y] : ext.spec.pairs)
        if (!(extension_apply(ext, x) == y)) return false;
    return true;
}

} // namespace ultra
