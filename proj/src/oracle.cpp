#include "ultraiso/oracle.hpp"

#include <algorithm>
#include <numeric>

#include "ultraiso/errors.hpp"

namespace ultra {

namespace {

constexpr std::uint64_t kOraclePointLimit = 4096;

// Index-level tables for one finite space. The oracle works on dense point
// indices with precomputed distance codes; it shares the definitional
// arithmetic with the rest of the library but none of the verification logic.
struct Tables {
    std::uint64_t n = 0;
    std::vector<std::uint8_t> dist;          // dist code matrix, n x n
    std::vector<std::uint32_t> add;          // addition, n x n
    std::vector<std::vector<std::uint32_t>> scal; // per nonzero scalar
    std::vector<std::vector<std::uint32_t>> spheres; // nonzero points by norm code

    std::uint8_t d(std::uint64_t i, std::uint64_t j) const { return dist[i * n + j]; }
    std::uint32_t sum(std::uint64_t i, std::uint64_t j) const { return add[i * n + j]; }
};

Tables build_tables(const Space& space) {
    if (!space.is_finite()) throw DomainError("the oracle handles finite spaces only");
    Tables t;
    t.n = space.point_count();
    if (t.n > kOraclePointLimit)
        throw DomainError("space too large for the oracle (" + std::to_string(t.n) +
                          " points)");
    const auto& codes = space.norm_code_table();
    std::vector<Point> pts = space.all_points();

    t.add.resize(t.n * t.n);
    t.dist.resize(t.n * t.n);
    for (std::uint64_t i = 0; i < t.n; ++i)
        for (std::uint64_t j = 0; j < t.n; ++j) {
            const std::uint64_t s = space.index_of(space.add(pts[i], pts[j]));
            t.add[i * t.n + j] = static_cast<std::uint32_t>(s);
            t.dist[i * t.n + j] =
                codes[space.index_of(space.sub(pts[j], pts[i]))];
        }

    const auto scalars = space.field().all_elements();
    t.scal.resize(scalars.size());
    for (std::size_t s = 0; s < scalars.size(); ++s) {
        t.scal[s].resize(t.n);
        for (std::uint64_t i = 0; i < t.n; ++i)
            t.scal[s][i] =
                static_cast<std::uint32_t>(space.index_of(space.scalar_mul(scalars[s], pts[i])));
    }

    std::uint8_t max_code = 0;
    for (std::uint64_t i = 0; i < t.n; ++i) max_code = std::max(max_code, codes[i]);
    t.spheres.assign(max_code, {});
    for (std::uint64_t i = 0; i < t.n; ++i)
        if (codes[i] > 0) t.spheres[codes[i] - 1].push_back(static_cast<std::uint32_t>(i));
    return t;
}

Int candidate_count(const Tables& t) {
    Int total = 1;
    for (const auto& sphere : t.spheres) {
        Int f = 1;
        for (std::size_t k = 2; k <= sphere.size(); ++k) f *= k;
        total *= f;
    }
    return total;
}

bool preserves_distances(const Tables& t, const std::vector<std::uint32_t>& img,
                         const std::vector<std::uint32_t>& nonzero) {
    for (std::size_t a = 0; a < nonzero.size(); ++a)
        for (std::size_t b = a + 1; b < nonzero.size(); ++b) {
            const std::uint32_t i = nonzero[a], j = nonzero[b];
            if (t.d(img[i], img[j]) != t.d(i, j)) return false;
        }
    return true;
}

bool map_is_linear(const Tables& t, const std::vector<std::uint32_t>& img) {
    for (std::uint64_t i = 0; i < t.n; ++i)
        for (std::uint64_t j = i; j < t.n; ++j)
            if (img[t.sum(i, j)] != t.sum(img[i], img[j])) return false;
    for (const auto& mult : t.scal)
        for (std::uint64_t i = 0; i < t.n; ++i)
            if (img[mult[i]] != mult[img[i]]) return false;
    return true;
}

// Runs fn for every product of per-sphere permutations, in lexicographic
// order; fn returns false to stop.
void for_each_candidate(const Tables& t,
                        const std::function<bool(const std::vector<std::uint32_t>&)>& fn) {
    std::vector<std::vector<std::uint32_t>> perms;
    for (const auto& sphere : t.spheres) {
        std::vector<std::uint32_t> id(sphere.size());
        std::iota(id.begin(), id.end(), 0);
        perms.push_back(std::move(id));
    }
    std::vector<std::uint32_t> img(t.n);
    const auto assemble = [&]() {
        img[0] = 0; // index 0 is the zero point; centred maps fix it
        for (std::size_t s = 0; s < t.spheres.size(); ++s)
            for (std::size_t k = 0; k < t.spheres[s].size(); ++k)
                img[t.spheres[s][k]] = t.spheres[s][perms[s][k]];
    };
    while (true) {
        assemble();
        if (!fn(img)) return;
        std::size_t s = 0;
        while (s < perms.size() &&
               !std::next_permutation(perms[s].begin(), perms[s].end()))
            ++s;
        if (s == perms.size()) return;
    }
}

std::vector<std::uint32_t> nonzero_points(const Tables& t) {
    std::vector<std::uint32_t> nz;
    for (const auto& sphere : t.spheres) nz.insert(nz.end(), sphere.begin(), sphere.end());
    std::sort(nz.begin(), nz.end());
    return nz;
}

// Deterministic witness search for over-cap spaces: transpositions of
// metrically twin points (no third point strictly closer to either) are
// always isometries; scan them for a nonlinear one.
std::optional<DenseMap> find_nonlinear_by_transposition(const Tables& t) {
    const auto nz = nonzero_points(t);
    for (std::size_t a = 0; a < nz.size(); ++a)
        for (std::size_t b = a + 1; b < nz.size(); ++b) {
            const std::uint32_t i = nz[a], j = nz[b];
            if (t.d(i, j) == 0) continue;
            bool twin = true;
            for (const std::uint32_t z : nz) {
                if (z == i || z == j) continue;
                if (t.d(z, i) != t.d(z, j)) {
                    twin = false;
                    break;
                }
            }
            if (!twin) continue;
            DenseMap m;
            m.img.resize(t.n);
            std::iota(m.img.begin(), m.img.end(), 0);
            std::swap(m.img[i], m.img[j]);
            if (!map_is_linear(t, m.img)) return m;
        }
    return std::nullopt;
}

} // namespace

PointFn dense_to_fn(const Space& space, DenseMap map) {
    return [space, map = std::move(map)](const Point& x) {
        return space.point_at(map.img[space.index_of(x)]);
    };
}

std::vector<DenseMap> enumerate_centred_isometries(const Space& space,
                                                   std::uint64_t cap) {
    const Tables t = build_tables(space);
    const Int cand = candidate_count(t);
    if (cand > cap) throw CapExceeded(cand.str(), cap);
    const auto nz = nonzero_points(t);
    std::vector<DenseMap> found;
    for_each_candidate(t, [&](const std::vector<std::uint32_t>& img) {
        if (preserves_distances(t, img, nz)) found.push_back(DenseMap{img});
        return true;
    });
    return found;
}

IsometryCensus census(const Space& space, std::uint64_t cap) {
    const Tables t = build_tables(space);
    IsometryCensus c;
    const Int cand = candidate_count(t);
    c.candidates = cand.str();
    if (cand > cap) {
        c.sampled = true;
        c.nonlinear_witness = find_nonlinear_by_transposition(t);
        return c;
    }
    const auto nz = nonzero_points(t);
    for_each_candidate(t, [&](const std::vector<std::uint32_t>& img) {
        if (!preserves_distances(t, img, nz)) return true;
        ++c.total;
        if (map_is_linear(t, img)) {
            ++c.linear;
            ++c.affine; // centred maps: f - f(0) = f, affine iff linear
        } else if (!c.nonlinear_witness) {
            c.nonlinear_witness = DenseMap{img};
        }
        return true;
    });
    return c;
}

bool all_centred_isometries_linear(const Space& space, std::uint64_t cap) {
    const IsometryCensus c = census(space, cap);
    if (!c.sampled) return c.linear == c.total;
    if (c.nonlinear_witness) return false;
    throw DomainError("census sampled " + c.candidates +
                      " candidates without a verdict; raise the cap");
}

IsoscelesResult check_isosceles_exhaustive(const Space& space) {
    const Tables t = build_tables(space);
    for (std::uint64_t z = 0; z < t.n; ++z)
        for (std::uint64_t x = 0; x < t.n; ++x) {
            const std::uint8_t dxz = t.d(x, z);
            for (std::uint64_t y = 0; y < t.n; ++y) {
                const std::uint8_t dyz = t.d(y, z);
                if (dxz < dyz && t.d(x, y) != dyz)
                    return IsoscelesResult{false, space.point_at(x), space.point_at(y),
                                           space.point_at(z)};
            }
        }
    return {};
}

IsoscelesResult check_isosceles_sampled(const Space& space, std::size_t count,
                                        std::uint64_t seed) {
    Prng rng(seed);
    for (std::size_t k = 0; k < count; ++k) {
        const Point x = space.random_point(rng);
        const Point y = space.random_point(rng);
        const Point z = space.random_point(rng);
        const Rational dxz = space.distance(x, z);
        const Rational dyz = space.distance(y, z);
        if (dxz < dyz && space.distance(x, y) != dyz)
            return IsoscelesResult{false, x, y, z};
    }
    return {};
}

} // namespace ultra
