#include "ultraiso.h"

#include <cstring>
#include <new>

#include "ultraiso/errors.hpp"
#include "ultraiso/json_io.hpp"

using namespace ultra;

struct ultraiso_space {
    Space space;
};

struct ultraiso_iso {
    Isometry iso;
};

namespace {

thread_local std::string g_last_error;

char* copy_out(const std::string& s) {
    char* buf = new char[s.size() + 1];
    std::memcpy(buf, s.c_str(), s.size() + 1);
    return buf;
}

template <typename Fn>
ultraiso_status wrap(Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        g_last_error = e.what();
        return ULTRAISO_BAD_INPUT;
    } catch (const ValuationOverflow& e) {
        g_last_error = e.what();
        return ULTRAISO_RANGE;
    } catch (const CapExceeded& e) {
        g_last_error = e.what();
        return ULTRAISO_RANGE;
    } catch (const DepthExhausted& e) {
        g_last_error = e.what();
        return ULTRAISO_RANGE;
    } catch (const DomainError& e) {
        g_last_error = e.what();
        return ULTRAISO_BAD_INPUT;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return ULTRAISO_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return ULTRAISO_INTERNAL;
    }
}

// Norm window an isometry tree acts on; nullopt when the tree is the identity.
std::optional<EnumerationSpec> tree_check_spec(const Isometry& iso, int depth) {
    const auto radii = tree_radii(iso);
    if (!radii.empty()) return EnumerationSpec{radii.front(), radii.back(), depth};
    if (!iso.root) return std::nullopt;
    // Leaf-only tree: check one representative band of radii (finite spaces:
    // everything; p-adic: the [1/p, p] band, homogeneity covers the rest).
    const auto vals = iso.space.value_set_all();
    Rational lo = vals.front();
    Rational hi = vals.back();
    if (!iso.space.is_finite()) {
        const unsigned p = iso.space.field().desc().p;
        if (rat_prime_power(p, -1) > lo) lo = rat_prime_power(p, -1);
        if (rat_prime_power(p, 1) < hi) hi = rat_prime_power(p, 1);
        if (lo > hi) {
            lo = vals.front();
            hi = vals.back();
        }
    }
    return EnumerationSpec{lo, hi, depth};
}

Json verify_result_to_json(const Space& space, const VerifyResult& res) {
    Json j;
    j["schema"] = "1";
    j["result"] = res.pass ? "pass" : "fail";
    if (!res.pass) {
        j["reason"] = res.reason;
        if (res.witness) {
            j["witness"] = Json{{"x", point_to_json_obj(space, res.witness->first)},
                                {"y", point_to_json_obj(space, res.witness->second)}};
        }
    }
    return j;
}

std::vector<std::pair<Point, Point>> dense_to_pairs(const Space& space,
                                                    const DenseMap& map) {
    std::vector<std::pair<Point, Point>> pairs;
    pairs.reserve(map.img.size());
    for (std::uint64_t i = 0; i < map.img.size(); ++i)
        pairs.emplace_back(space.point_at(i), space.point_at(map.img[i]));
    return pairs;
}

} // namespace

extern "C" {

uint32_t ultraiso_abi_version(void) { return 1; }

const char* ultraiso_last_error(void) { return g_last_error.c_str(); }

void ultraiso_string_free(char* s) { delete[] s; }

ultraiso_status ultraiso_space_parse(const char* json, ultraiso_space** out) {
    if (!json || !out) {
        g_last_error = "null argument";
        return ULTRAISO_BAD_INPUT;
    }
    return wrap([&] {
        *out = new ultraiso_space{parse_space(json)};
        return ULTRAISO_OK;
    });
}

void ultraiso_space_free(ultraiso_space* space) { delete space; }

ultraiso_status ultraiso_space_describe(const ultraiso_space* space, char** json_out) {
    if (!space || !json_out) {
        g_last_error = "null argument";
        return ULTRAISO_BAD_INPUT;
    }
    return wrap([&] {
        Json j = space_to_json_obj(space->space);
        Json values = Json::array();
        for (const auto& v : space->space.value_set_all()) values.push_back(rat_str(v));
        j["values"] = std::move(values);
        j["trivial_norm"] = space->space.trivial_norm();
        *json_out = copy_out(j.dump());
        return ULTRAISO_OK;
    });
}

ultraiso_status ultraiso_decompose(const ultraiso_space* space, const char* radius,
                                   int32_t depth, char** json_out) {
    if (!space || !radius || !json_out) {
        g_last_error = "null argument";
        return ULTRAISO_BAD_INPUT;
    }
    return wrap([&] {
        const Rational r = rat_parse(radius, "radius");
        if (r <= 0) throw ParseError("radius must be positive", "radius");
        const auto dec = decompose_sphere(space->space, r);
        Json j;
        j["schema"] = "1";
        j["radius"] = rat_str(r);
        j["depth"] = depth;
        j["empty"] = dec->classes.empty();
        j["count"] = dec->classes.size();
        Json classes = Json::array();
        for (const auto& c : dec->classes)
            classes.push_back(point_to_json_obj(space->space, c.rep));
        j["classes"] = std::move(classes);
        *json_out = copy_out(j.dump());
        return ULTRAISO_OK;
    });
}

ultraiso_status ultraiso_iso_parse(const ultraiso_space* space, const char* json,
                                   ultraiso_iso** out) {
    if (!space || !json || !out) {
        g_last_error = "null argument";
        return ULTRAISO_BAD_INPUT;
    }
    return wrap([&] {
        *out = new ultraiso_iso{parse_isometry(space->space, json)};
        return ULTRAISO_OK;
    });
}

void ultraiso_iso_free(ultraiso_iso* iso) { delete iso; }

ultraiso_status ultraiso_iso_to_json(const ultraiso_iso* iso, char** json_out) {
    if (!iso || !json_out) {
        g_last_error = "null argument";
        return ULTRAISO_BAD_INPUT;
    }
    return wrap([&] {
        *json_out = copy_out(isometry_to_json(iso->iso));
        return ULTRAISO_OK;
    });
}

ultraiso_status ultraiso_iso_random(const ultraiso_space* space, int32_t depth,
                                    uint64_t seed, ultraiso_iso** out) {
    if (!space || !out) {
        g_last_error = "null argument";
        return ULTRAISO_BAD_INPUT;
    }
    return wrap([&] {
        const Space& s = space->space;
        EnumerationSpec spec = full_spec(s, depth);
        if (!s.is_finite()) {
            // Keep radii near 1 so that the default windows enumerate.
            const unsigned p = s.field().desc().p;
            spec.lo = rat_prime_power(p, -1);
            spec.hi = rat_prime_power(p, 1);
        }
        *out = new ultraiso_iso{random_isometry(s, spec, depth, seed)};
        return ULTRAISO_OK;
    });
}

ultraiso_status ultraiso_iso_apply(const ultraiso_iso* iso, const char* point_json,
                                   char** json_out) {
    if (!iso || !point_json || !json_out) {
        g_last_error = "null argument";
        return ULTRAISO_BAD_INPUT;
    }
    return wrap([&] {
        const Point x = parse_point(iso->iso.space, point_json);
        iso->iso.space.check_point(x);
        const Point y = apply(iso->iso, x);
        Json j;
        j["schema"] = "1";
        j["point"] = point_to_json_obj(iso->iso.space, y);
        *json_out = copy_out(j.dump());
        return ULTRAISO_OK;
    });
}

ultraiso_status ultraiso_iso_verify(const ultraiso_iso* iso, int32_t depth,
                                    char** report_json) {
    if (!iso || !report_json) {
        g_last_error = "null argument";
        return ULTRAISO_BAD_INPUT;
    }
    return wrap([&] {
        const auto spec = tree_check_spec(iso->iso, depth);
        VerifyResult res;
        Json j;
        if (spec) {
            res = verify_isometry(iso->iso.space, as_fn(iso->iso), *spec);
            j = verify_result_to_json(iso->iso.space, res);
            j["window"] = Json{{"lo", rat_str(spec->lo)},
                               {"hi", rat_str(spec->hi)},
                               {"depth", spec->depth}};
        } else {
            j["schema"] = "1";
            j["result"] = "pass";
            j["note"] = "identity tree";
        }
        *report_json = copy_out(j.dump());
        return res.pass ? ULTRAISO_OK : ULTRAISO_NEGATIVE;
    });
}

ultraiso_status ultraiso_iso_compose(const ultraiso_iso* first_applied,
                                     const ultraiso_iso* second_applied, int32_t depth,
                                     ultraiso_iso** out) {
    if (!first_applied || !second_applied || !out) {
        g_last_error = "null argument";
        return ULTRAISO_BAD_INPUT;
    }
    return wrap([&] {
        const Isometry& f = second_applied->iso;
        const Isometry& g = first_applied->iso;
        if (!(f.space == g.space)) throw DomainError("isometries live on different spaces");
        const PointFn composed = compose_maps(as_fn(f), as_fn(g));
        auto radii = tree_radii(f);
        for (const auto& r : tree_radii(g)) radii.push_back(r);
        if (radii.empty()) {
            *out = new ultraiso_iso{Isometry{f.space, nullptr, std::max(depth, 1)}};
            return ULTRAISO_OK;
        }
        std::sort(radii.begin(), radii.end());
        const EnumerationSpec spec{radii.front(), radii.back(), depth};
        *out = new ultraiso_iso{factor_isometry(f.space, composed, spec,
                                                std::max(depth, 1))};
        return ULTRAISO_OK;
    });
}

ultraiso_status ultraiso_iso_factor_pairs(const ultraiso_space* space,
                                          const char* pairs_json, int32_t depth,
                                          ultraiso_iso** out) {
    if (!space || !pairs_json || !out) {
        g_last_error = "null argument";
        return ULTRAISO_BAD_INPUT;
    }
    return wrap([&] {
        const Space& s = space->space;
        const Json j = parse_json_text(pairs_json, "map");
        const auto pairs = parse_point_map_obj(s, j, "map");
        if (pairs.empty()) throw ParseError("empty map", "map.map");
        std::unordered_map<std::string, Point> table;
        Rational lo, hi;
        bool first = true;
        for (const auto& [x, y] : pairs) {
            s.check_point(x);
            s.check_point(y);
            const Rational n = s.norm(x);
            if (n > 0) {
                if (first || n < lo) lo = n;
                if (first || n > hi) hi = n;
                first = false;
            }
            table.emplace(point_to_json(s, x), y);
        }
        if (first) throw ParseError("map must move some nonzero point", "map.map");
        PointFn fn = [&s, table = std::move(table)](const Point& x) {
            auto it = table.find(point_to_json(s, x));
            if (it == table.end())
                throw DomainError("map is not defined at " + point_str(s, x));
            return it->second;
        };
        const EnumerationSpec spec{lo, hi, depth};
        *out = new ultraiso_iso{factor_isometry(s, fn, spec, std::max(depth, 1))};
        return ULTRAISO_OK;
    });
}

ultraiso_status ultraiso_classify(const ultraiso_space* space, int32_t depth,
                                  char** json_out) {
    if (!space || !json_out) {
        g_last_error = "null argument";
        return ULTRAISO_BAD_INPUT;
    }
    return wrap([&] {
        const auto res = classify(space->space, depth);
        Json j;
        j["schema"] = "1";
        j["verdict"] = res.all_linear ? "all_linear" : "nonlinear_witness";
        j["case"] = res.case_name;
        if (res.witness) j["witness"] = isometry_to_json_obj(*res.witness);
        if (res.certificate)
            j["certificate"] = certificate_to_json_obj(space->space, *res.certificate);
        *json_out = copy_out(j.dump());
        return ULTRAISO_OK;
    });
}

ultraiso_status ultraiso_census(const ultraiso_space* space, uint64_t cap,
                                char** json_out) {
    if (!space || !json_out) {
        g_last_error = "null argument";
        return ULTRAISO_BAD_INPUT;
    }
    return wrap([&] {
        const auto c = census(space->space, cap ? cap : 1'000'000);
        Json j;
        j["schema"] = "1";
        j["sampled"] = c.sampled;
        j["candidates"] = c.candidates;
        if (!c.sampled) {
            j["total"] = c.total;
            j["linear"] = c.linear;
            j["affine"] = c.affine;
        }
        if (c.nonlinear_witness) {
            j["nonlinear_witness"] =
                point_map_to_json_obj(space->space,
                                      dense_to_pairs(space->space, *c.nonlinear_witness));
        } else {
            j["nonlinear_witness"] = nullptr;
        }
        *json_out = copy_out(j.dump());
        return ULTRAISO_OK;
    });
}

ultraiso_status ultraiso_enumerate(const ultraiso_space* space, uint64_t cap,
                                   char** json_out) {
    if (!space || !json_out) {
        g_last_error = "null argument";
        return ULTRAISO_BAD_INPUT;
    }
    return wrap([&] {
        const auto maps = enumerate_centred_isometries(space->space, cap ? cap : 1'000'000);
        Json j;
        j["schema"] = "1";
        j["count"] = maps.size();
        Json list = Json::array();
        for (const auto& m : maps)
            list.push_back(point_map_to_json_obj(space->space,
                                                 dense_to_pairs(space->space, m)));
        j["isometries"] = std::move(list);
        *json_out = copy_out(j.dump());
        return ULTRAISO_OK;
    });
}

ultraiso_status ultraiso_tingley_extend(const char* spec_json, int32_t m, int32_t depth,
                                        char** json_out) {
    if (!spec_json || !json_out) {
        g_last_error = "null argument";
        return ULTRAISO_BAD_INPUT;
    }
    return wrap([&] {
        const SphereIsometrySpec spec = parse_sphere_spec(spec_json);
        const auto res = extend_sphere_isometry(spec, std::nullopt, std::nullopt, m);
        Json j;
        j["schema"] = "1";
        if (!res.extended) {
            j["result"] = "obstructed";
            j["reason"] = obstruction_kind_name(res.obstruction->kind);
            j["detail"] = res.obstruction->detail;
            *json_out = copy_out(j.dump());
            return ULTRAISO_NEGATIVE;
        }
        const GlobalExtension& ext = *res.extension;
        const Space& X = spec.domain;
        const Rational a = X.field().abs_value(ext.alpha);
        const auto vals = X.value_set_all();
        Rational lo = spec.r;
        const Rational floor_rho =
            spec.r * rat_prime_power(X.field().desc().p, -spec.depth);
        for (int i = 0; i <= m; ++i)
            if (lo / a >= floor_rho && lo / a >= vals.front()) lo /= a;
        Rational hi = spec.r;
        for (int i = 0; i < m; ++i)
            if (hi * a <= vals.back()) hi *= a;

        const VerifyResult vr = verify_extension(ext, lo, hi, depth);
        j["result"] = "extended";
        j["x0"] = point_to_json_obj(X, ext.x0);
        j["alpha"] = element_to_json(X.field(), ext.alpha);
        j["m"] = ext.m;
        j["window"] = Json{{"lo", rat_str(lo)}, {"hi", rat_str(hi)}, {"depth", depth}};
        j["verified"] = vr.pass;
        if (!vr.pass) j["verify_reason"] = vr.reason;
        j["restricts_exactly"] = extension_restricts_to_spec(ext);
        *json_out = copy_out(j.dump());
        return vr.pass ? ULTRAISO_OK : ULTRAISO_NEGATIVE;
    });
}

ultraiso_status ultraiso_tingley_obstruction(const char* space_json,
                                             const char* space2_json, const char* radius,
                                             const char* radius_prime, char** json_out) {
    if (!space_json || !space2_json || !radius || !radius_prime || !json_out) {
        g_last_error = "null argument";
        return ULTRAISO_BAD_INPUT;
    }
    return wrap([&] {
        const Space X = parse_space(space_json);
        const Space Y = parse_space(space2_json);
        const Rational r = rat_parse(radius, "radius");
        const Rational rp = rat_parse(radius_prime, "rprime");
        const auto obs = extension_obstruction(X, Y, r, rp);
        Json j;
        j["schema"] = "1";
        if (obs) {
            j["result"] = "obstructed";
            j["reason"] = obstruction_kind_name(obs->kind);
            j["detail"] = obs->detail;
        } else {
            j["result"] = "no_obstruction";
        }
        *json_out = copy_out(j.dump());
        return obs ? ULTRAISO_NEGATIVE : ULTRAISO_OK;
    });
}

} // extern "C"
