#include "ultraiso/geometry.hpp"

#include <algorithm>
#include <map>

#include "ultraiso/errors.hpp"

namespace ultra {

namespace {

constexpr std::uint64_t kEnumerationCap = 4'000'000;

// Smallest integer m with p^m > t (t > 0).
int min_exponent_gt(const Rational& t, unsigned p) {
    int m = 0;
    Rational pow = 1;
    if (pow > t) {
        while (pow / p > t) {
            pow /= p;
            --m;
        }
        return m;
    }
    while (pow <= t) {
        pow *= p;
        ++m;
    }
    return m;
}

// Smallest integer m with p^m >= t (t > 0).
int min_exponent_ge(const Rational& t, unsigned p) {
    int m = 0;
    Rational pow = 1;
    if (pow >= t) {
        while (pow / p >= t) {
            pow /= p;
            --m;
        }
        return m;
    }
    while (pow < t) {
        pow *= p;
        ++m;
    }
    return m;
}

// Per-coordinate shape of a sphere S(r): the coordinate constraint
// |x_i| <= r / w_i and whether the bound is attainable.
struct CoordBand {
    bool active = false; // w_i |x_i| = r is attainable in the window
    int cap = 0;         // p-adic: minimal valuation allowed
};

std::vector<CoordBand> sphere_bands(const Space& space, const Rational& r) {
    std::vector<CoordBand> bands(space.dim());
    const auto& fd = space.field().desc();
    for (std::size_t i = 0; i < space.dim(); ++i) {
        const Rational bound = r / space.weights()[i];
        if (space.field().is_finite()) {
            bands[i].active = bound == 1;
        } else {
            // Least valuation allowed: least e with p^-e <= bound.
            const int cap = min_exponent_ge(1 / bound, fd.p);
            bands[i].cap = cap;
            bands[i].active = rat_prime_power(fd.p, -cap) == bound && cap >= fd.vmin &&
                              cap <= fd.vmax;
        }
    }
    return bands;
}

void append_u32(std::string& key, std::uint32_t v) {
    key.push_back(static_cast<char>(v & 0xff));
    key.push_back(static_cast<char>((v >> 8) & 0xff));
    key.push_back(static_cast<char>((v >> 16) & 0xff));
    key.push_back(static_cast<char>((v >> 24) & 0xff));
}

struct GeometryCache {
    std::map<Rational, SphereDecompositionPtr> decomps;
    std::map<std::pair<Rational, int>, std::shared_ptr<const std::vector<Point>>> points;
};

GeometryCache& cache_of(const Space& space) {
    auto& slot = space.cache();
    if (!slot.decompositions) slot.decompositions = std::make_shared<GeometryCache>();
    return *static_cast<GeometryCache*>(slot.decompositions.get());
}

std::vector<Point> enumerate_sphere(const Space& space, const Rational& r, int depth);

} // namespace

bool ball_contains(const Space& space, const Ball& ball, const Point& y) {
    if (!ball.radius) return true;
    const Rational d = space.distance(ball.center, y);
    return ball.closed ? d <= *ball.radius : d < *ball.radius;
}

bool same_class(const Space& space, const Point& x, const Point& y, const Rational& r) {
    if (space.norm(x) != r || space.norm(y) != r)
        throw DomainError("same_class: points not on the sphere of radius " + rat_str(r));
    return space.distance(x, y) < r;
}

KeyPlan make_key_plan(const Space& space, const Rational& rho) {
    KeyPlan plan;
    plan.finite = space.field().is_finite();
    const auto& fd = space.field().desc();
    for (std::size_t i = 0; i < space.dim(); ++i) {
        const Rational bound = rho / space.weights()[i];
        if (plan.finite) {
            // |z| < bound pins z = 0 unless bound > 1.
            plan.include.push_back(bound <= 1);
        } else {
            plan.modulus_exp.push_back(min_exponent_gt(1 / bound, fd.p));
        }
    }
    return plan;
}

void append_residue_key(const Space& space, const KeyPlan& plan, const Point& x,
                        std::string& out) {
    for (std::size_t i = 0; i < space.dim(); ++i) {
        if (plan.finite) {
            if (plan.include[i]) append_u32(out, x.coords[i].index + 1);
            out.push_back('|');
            continue;
        }
        const int m = plan.modulus_exp[i];
        const auto& c = x.coords[i];
        if (c.zero || c.valuation >= m) {
            out.push_back('Z');
        } else {
            append_u32(out, static_cast<std::uint32_t>(
                                c.valuation - space.field().desc().vmin + 1));
            for (int pos = c.valuation; pos < m; ++pos)
                append_u32(out, space.field().digit_at(c, pos));
        }
        out.push_back('|');
    }
}

std::string residue_key(const Space& space, const Point& x, const Rational& rho) {
    const KeyPlan plan = make_key_plan(space, rho);
    std::string key;
    key.reserve(space.dim() * 8);
    append_residue_key(space, plan, x, key);
    return key;
}

SphereDecompositionPtr decompose_sphere(const Space& space, const Rational& r) {
    if (r <= 0) throw DomainError("sphere radius must be positive");

    auto& slot = space.cache();
    {
        std::lock_guard<std::mutex> lock(slot.mutex);
        auto& cache = cache_of(space);
        auto it = cache.decomps.find(r);
        if (it != cache.decomps.end()) return it->second;
    }

    const auto bands = sphere_bands(space, r);
    const auto& fd = space.field().desc();
    const std::uint32_t radix = space.field().is_finite() ? fd.q : fd.p;

    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < bands.size(); ++i)
        if (bands[i].active) active.push_back(i);

    auto result = std::make_shared<SphereDecomposition>();
    result->radius = r;
    result->plan = make_key_plan(space, r);

    if (!active.empty()) {
        std::uint64_t count = 1;
        for (std::size_t k = 0; k < active.size(); ++k) {
            count *= radix;
            if (count > kEnumerationCap)
                throw DomainError("sphere has too many classes to enumerate");
        }
        std::vector<std::uint32_t> tuple(active.size(), 0);
        for (std::uint64_t n = 0; n < count; ++n) {
            std::uint64_t rest = n;
            bool nonzero = false;
            for (std::size_t k = 0; k < active.size(); ++k) {
                tuple[k] = static_cast<std::uint32_t>(rest % radix);
                rest /= radix;
                nonzero = nonzero || tuple[k] != 0;
            }
            if (!nonzero) continue;
            Point rep = space.zero_point();
            for (std::size_t k = 0; k < active.size(); ++k) {
                const std::size_t i = active[k];
                if (space.field().is_finite()) {
                    rep.coords[i].index = tuple[k];
                } else if (tuple[k] != 0) {
                    rep.coords[i] = space.field().mul(
                        space.field().from_integer(tuple[k]),
                        space.field().p_power(bands[i].cap));
                }
            }
            result->classes.push_back(BallClass{r, std::move(rep)});
        }
        std::sort(result->classes.begin(), result->classes.end(),
                  [](const BallClass& a, const BallClass& b) {
                      return point_less(a.rep, b.rep);
                  });
        std::string key;
        for (std::size_t i = 0; i < result->classes.size(); ++i) {
            key.clear();
            append_residue_key(space, result->plan, result->classes[i].rep, key);
            result->index_by_key.emplace(key, i);
        }
    }

    std::lock_guard<std::mutex> lock(slot.mutex);
    auto& cache = cache_of(space);
    return cache.decomps.emplace(r, std::move(result)).first->second;
}

std::size_t class_index_of(const Space& space, const SphereDecomposition& dec,
                           const Point& x) {
    std::string key;
    key.reserve(space.dim() * 8);
    append_residue_key(space, dec.plan, x, key);
    auto it = dec.index_by_key.find(key);
    if (it == dec.index_by_key.end())
        throw DomainError("point is not on the sphere of radius " + rat_str(dec.radius));
    return it->second;
}

namespace {

std::vector<Point> enumerate_sphere(const Space& space, const Rational& r, int depth) {
    std::vector<Point> pts;

    if (space.is_finite()) {
        for (auto& p : space.all_points())
            if (space.norm(p) == r) pts.push_back(std::move(p));
        std::sort(pts.begin(), pts.end(), point_less);
        return pts;
    }

    if (depth < 0) throw DomainError("depth must be >= 0");
    const auto bands = sphere_bands(space, r);
    const auto& fd = space.field().desc();

    bool any_active = false;
    for (const auto& b : bands) any_active = any_active || b.active;
    if (!any_active) return pts; // empty sphere

    std::vector<int> spans(space.dim());
    std::uint64_t count = 1;
    for (std::size_t i = 0; i < space.dim(); ++i) {
        const int span = depth + (bands[i].active ? 1 : 0);
        spans[i] = span;
        if (span > static_cast<int>(fd.precision))
            throw DomainError("depth " + std::to_string(depth) +
                              " exceeds the field precision " +
                              std::to_string(fd.precision));
        if (bands[i].cap < fd.vmin || bands[i].cap + span - 1 > fd.vmax)
            throw ValuationOverflow(bands[i].cap + span - 1, fd.vmin, fd.vmax);
        for (int k = 0; k < span; ++k) {
            count *= fd.p;
            if (count > kEnumerationCap)
                throw DomainError("sphere enumeration exceeds the point cap");
        }
    }

    std::vector<std::uint32_t> digits;
    for (std::uint64_t n = 0; n < count; ++n) {
        std::uint64_t rest = n;
        Point pt = space.zero_point();
        bool on_sphere = false;
        for (std::size_t i = 0; i < space.dim(); ++i) {
            int lead = -1;
            digits.assign(static_cast<std::size_t>(spans[i]), 0);
            for (int k = 0; k < spans[i]; ++k) {
                digits[static_cast<std::size_t>(k)] =
                    static_cast<std::uint32_t>(rest % fd.p);
                rest /= fd.p;
                if (digits[static_cast<std::size_t>(k)] != 0 && lead < 0) lead = k;
            }
            if (lead < 0) continue; // coordinate zero
            if (bands[i].active && lead == 0) on_sphere = true;
            FieldElement e;
            e.padic = true;
            e.valuation = bands[i].cap + lead;
            e.digits.assign(fd.precision, 0);
            for (int k = lead; k < spans[i]; ++k)
                e.digits[static_cast<std::size_t>(k - lead)] =
                    digits[static_cast<std::size_t>(k)];
            pt.coords[i] = std::move(e);
        }
        if (on_sphere) pts.push_back(std::move(pt));
    }
    std::sort(pts.begin(), pts.end(), point_less);
    return pts;
}

} // namespace

const std::vector<Point>& sphere_points(const Space& space, const Rational& r,
                                        int depth) {
    if (r <= 0) throw DomainError("sphere radius must be positive");
    if (space.is_finite()) depth = 0;
    auto& slot = space.cache();
    {
        std::lock_guard<std::mutex> lock(slot.mutex);
        auto& cache = cache_of(space);
        auto it = cache.points.find({r, depth});
        if (it != cache.points.end()) return *it->second;
    }
    auto pts =
        std::make_shared<const std::vector<Point>>(enumerate_sphere(space, r, depth));
    std::lock_guard<std::mutex> lock(slot.mutex);
    auto& cache = cache_of(space);
    return *cache.points.emplace(std::make_pair(r, depth), std::move(pts))
                .first->second;
}

std::vector<Rational> domain_radii(const Space& space, const EnumerationSpec& spec) {
    return space.value_set(spec.lo, spec.hi);
}

std::vector<Point> domain_points(const Space& space, const EnumerationSpec& spec) {
    std::vector<Point> pts;
    pts.push_back(space.zero_point());
    for (const auto& r : domain_radii(space, spec))
        for (const auto& p : sphere_points(space, r, spec.depth)) pts.push_back(p);
    return pts;
}

EnumerationSpec full_spec(const Space& space, int depth) {
    const auto values = space.value_set_all();
    EnumerationSpec spec;
    spec.lo = values.front();
    spec.hi = values.back();
    spec.depth = depth;
    return spec;
}

bool closed_ball_equals_open(const Space& space, const Rational& r_open,
                             const Rational& r_closed) {
    if (r_open <= 0 || r_closed <= 0) throw DomainError("radii must be positive");
    for (const auto& v : space.value_set_all())
        if ((v < r_open) != (v <= r_closed)) return false;
    return true;
}

} // namespace ultra
