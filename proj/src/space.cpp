#include "ultraiso/space.hpp"

#include <algorithm>
#include <mutex>
#include <set>

#include "ultraiso/errors.hpp"

namespace ultra {

int compare_points(const Point& a, const Point& b) {
    const std::size_t n = std::min(a.coords.size(), b.coords.size());
    for (std::size_t i = 0; i < n; ++i) {
        int c = compare_elements(a.coords[i], b.coords[i]);
        if (c != 0) return c;
    }
    if (a.coords.size() != b.coords.size())
        return a.coords.size() < b.coords.size() ? -1 : 1;
    return 0;
}

bool point_less(const Point& a, const Point& b) { return compare_points(a, b) < 0; }

struct Space::Data {
    Field field;
    std::vector<Rational> weights;
    mutable CacheSlot cache;
    mutable std::vector<std::uint8_t> norm_codes; // finite spaces, lazy

    Data(Field f, std::vector<Rational> w) : field(std::move(f)), weights(std::move(w)) {}
};

Space::Space(Field field, std::vector<Rational> weights)
    : d_(std::make_shared<Data>(std::move(field), std::move(weights))) {
    if (d_->weights.empty()) throw ParseError("dimension must be >= 1", "space.dim");
    for (const auto& w : d_->weights)
        if (w <= 0) throw ParseError("weights must be strictly positive", "space.weights");
    if (d_->field.is_finite() && dim() > 12)
        throw ParseError("finite space dimension too large to enumerate", "space.dim");
}

const Field& Space::field() const { return d_->field; }
const std::vector<Rational>& Space::weights() const { return d_->weights; }
std::size_t Space::dim() const { return d_->weights.size(); }

bool Space::operator==(const Space& other) const {
    return d_->field.desc() == other.d_->field.desc() && d_->weights == other.d_->weights;
}

Point Space::zero_point() const {
    Point x;
    x.coords.assign(dim(), field().zero());
    return x;
}

bool Space::is_zero(const Point& x) const {
    for (const auto& c : x.coords)
        if (!field().is_zero(c)) return false;
    return true;
}

void Space::check_point(const Point& x) const {
    if (x.coords.size() != dim())
        throw ParseError("point has " + std::to_string(x.coords.size()) +
                         " coordinates, space has dimension " + std::to_string(dim()));
    for (const auto& c : x.coords) field().check_canonical(c);
}

Rational Space::norm(const Point& x) const {
    Rational best = 0;
    for (std::size_t i = 0; i < x.coords.size(); ++i) {
        if (field().is_zero(x.coords[i])) continue;
        Rational v = d_->weights[i] * field().abs_value(x.coords[i]);
        if (v > best) best = v;
    }
    return best;
}

Rational Space::distance(const Point& x, const Point& y) const { return norm(sub(y, x)); }

Point Space::add(const Point& x, const Point& y) const {
    Point r;
    r.coords.reserve(dim());
    for (std::size_t i = 0; i < dim(); ++i)
        r.coords.push_back(field().add(x.coords[i], y.coords[i]));
    return r;
}

Point Space::sub(const Point& x, const Point& y) const {
    Point r;
    r.coords.reserve(dim());
    for (std::size_t i = 0; i < dim(); ++i)
        r.coords.push_back(field().sub(x.coords[i], y.coords[i]));
    return r;
}

Point Space::neg(const Point& x) const {
    Point r;
    r.coords.reserve(dim());
    for (const auto& c : x.coords) r.coords.push_back(field().neg(c));
    return r;
}

Point Space::scalar_mul(const FieldElement& lambda, const Point& x) const {
    Point r;
    r.coords.reserve(dim());
    for (const auto& c : x.coords) r.coords.push_back(field().mul(lambda, c));
    return r;
}

std::vector<Rational> Space::value_set(const Rational& lo, const Rational& hi) const {
    std::set<Rational> vals;
    if (field().is_finite()) {
        for (const auto& w : d_->weights)
            if (w >= lo && w <= hi) vals.insert(w);
    } else {
        const auto& fd = field().desc();
        for (const auto& w : d_->weights)
            for (int v = fd.vmin; v <= fd.vmax; ++v) {
                Rational val = w * rat_prime_power(fd.p, -v);
                if (val >= lo && val <= hi) vals.insert(val);
            }
    }
    return {vals.begin(), vals.end()};
}

std::vector<Rational> Space::value_set_all() const {
    if (field().is_finite()) return value_set(Rational(0), Rational(Int(1) << 62));
    const auto& fd = field().desc();
    Rational lo, hi;
    for (std::size_t i = 0; i < d_->weights.size(); ++i) {
        Rational wlo = d_->weights[i] * rat_prime_power(fd.p, -fd.vmin);
        Rational whi = d_->weights[i] * rat_prime_power(fd.p, -fd.vmax);
        if (wlo > whi) std::swap(wlo, whi);
        if (i == 0 || wlo < lo) lo = wlo;
        if (i == 0 || whi > hi) hi = whi;
    }
    return value_set(lo, hi);
}

bool Space::trivial_norm() const { return value_set_all().size() == 1; }

Point Space::random_point(Prng& rng) const {
    Point x;
    x.coords.reserve(dim());
    for (std::size_t i = 0; i < dim(); ++i)
        x.coords.push_back(field().random_element(rng));
    return x;
}

std::uint64_t Space::point_count() const {
    if (!is_finite()) throw DomainError("point_count on an infinite space");
    std::uint64_t n = 1;
    for (std::size_t i = 0; i < dim(); ++i) n *= field().desc().q;
    return n;
}

std::uint64_t Space::index_of(const Point& x) const {
    std::uint64_t idx = 0;
    for (std::size_t i = dim(); i-- > 0;)
        idx = idx * field().desc().q + x.coords[i].index;
    return idx;
}

Point Space::point_at(std::uint64_t index) const {
    const std::uint32_t q = field().desc().q;
    Point x;
    x.coords.resize(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
        x.coords[i].index = static_cast<std::uint32_t>(index % q);
        index /= q;
    }
    return x;
}

std::vector<Point> Space::all_points() const {
    std::vector<Point> pts;
    const std::uint64_t n = point_count();
    pts.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) pts.push_back(point_at(i));
    return pts;
}

const std::vector<std::uint8_t>& Space::norm_code_table() const {
    std::lock_guard<std::mutex> lock(d_->cache.mutex);
    if (d_->norm_codes.empty()) {
        const auto values = value_set_all();
        const std::uint64_t n = point_count();
        d_->norm_codes.resize(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            Rational v = norm(point_at(i));
            if (v == 0) {
                d_->norm_codes[i] = 0;
            } else {
                auto it = std::lower_bound(values.begin(), values.end(), v);
                d_->norm_codes[i] = static_cast<std::uint8_t>(1 + (it - values.begin()));
            }
        }
    }
    return d_->norm_codes;
}

Space::CacheSlot& Space::cache() const { return d_->cache; }

} // namespace ultra
