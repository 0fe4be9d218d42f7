#include "ultraiso/json_io.hpp"

#include <algorithm>

#include "ultraiso/errors.hpp"

namespace ultra {

namespace {

const Json& need(const Json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError("missing field", where + "." + key);
    return *it;
}

std::string need_string(const Json& j, const char* key, const std::string& where) {
    const Json& v = need(j, key, where);
    if (!v.is_string()) throw ParseError("expected a string", where + "." + key);
    return v.get<std::string>();
}

std::int64_t need_int(const Json& j, const char* key, const std::string& where) {
    const Json& v = need(j, key, where);
    if (!v.is_number_integer()) throw ParseError("expected an integer", where + "." + key);
    return v.get<std::int64_t>();
}

Rational rational_from_json(const Json& j, const std::string& where) {
    if (j.is_number_integer()) return Rational(Int(j.get<std::int64_t>()));
    if (j.is_string()) return rat_parse(j.get<std::string>(), where);
    throw ParseError("expected a rational as integer or \"num/den\" string", where);
}

} // namespace

Json parse_json_text(const std::string& text, const std::string& what) {
    Json j = Json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("invalid JSON", what);
    return j;
}

FieldDesc parse_field_desc(const Json& j, const std::string& where) {
    if (!j.is_object()) throw ParseError("expected a field object", where);
    FieldDesc desc;
    const std::string kind = need_string(j, "kind", where);
    if (kind == "finite") {
        desc.kind = FieldKind::Finite;
        desc.q = static_cast<std::uint32_t>(need_int(j, "q", where));
    } else if (kind == "padic") {
        desc.kind = FieldKind::Padic;
        desc.p = static_cast<std::uint32_t>(need_int(j, "p", where));
        desc.precision = static_cast<std::uint32_t>(need_int(j, "precision", where));
        const Json& w = need(j, "window", where);
        if (!w.is_array() || w.size() != 2)
            throw ParseError("expected [vmin, vmax]", where + ".window");
        desc.vmin = w[0].get<int>();
        desc.vmax = w[1].get<int>();
    } else {
        throw ParseError("unknown field kind '" + kind + "'", where + ".kind");
    }
    return desc;
}

Json field_desc_to_json(const FieldDesc& desc) {
    Json j;
    if (desc.kind == FieldKind::Finite) {
        j["kind"] = "finite";
        j["q"] = desc.q;
    } else {
        j["kind"] = "padic";
        j["p"] = desc.p;
        j["precision"] = desc.precision;
        j["window"] = Json::array({desc.vmin, desc.vmax});
    }
    return j;
}

Space parse_space_obj(const Json& j, const std::string& where) {
    if (!j.is_object()) throw ParseError("expected a space object", where);
    Field field(parse_field_desc(need(j, "field", where), where + ".field"));
    const std::int64_t dim = need_int(j, "dim", where);
    if (dim < 1) throw ParseError("dim must be >= 1", where + ".dim");
    const Json& w = need(j, "weights", where);
    if (!w.is_array() || static_cast<std::int64_t>(w.size()) != dim)
        throw ParseError("weights must list exactly dim entries", where + ".weights");
    std::vector<Rational> weights;
    for (std::size_t i = 0; i < w.size(); ++i)
        weights.push_back(
            rational_from_json(w[i], where + ".weights[" + std::to_string(i) + "]"));
    return Space(std::move(field), std::move(weights));
}

Json space_to_json_obj(const Space& space) {
    Json j;
    j["schema"] = "1";
    j["field"] = field_desc_to_json(space.field().desc());
    j["dim"] = space.dim();
    Json w = Json::array();
    for (const auto& weight : space.weights()) w.push_back(rat_str(weight));
    j["weights"] = std::move(w);
    return j;
}

Space parse_space(const std::string& text) {
    return parse_space_obj(parse_json_text(text, "space"), "space");
}

std::string space_to_json(const Space& space) { return space_to_json_obj(space).dump(); }

FieldElement parse_element(const Field& field, const Json& j, const std::string& where) {
    if (field.is_finite()) {
        const std::uint32_t q = field.desc().q;
        if (j.is_number_integer()) {
            const std::int64_t v = j.get<std::int64_t>();
            if (q == 4 && (v < 0 || v > 1))
                throw ParseError("F_4 elements beyond 0 and 1 must use the labels "
                                 "\"x\" and \"x^2\"",
                                 where);
            return field.from_integer(Int(v));
        }
        if (j.is_string()) {
            const std::string s = j.get<std::string>();
            if (q == 4) {
                if (s == "0") return field.zero();
                if (s == "1") return field.one();
                FieldElement e;
                if (s == "x") {
                    e.index = 2;
                    return e;
                }
                if (s == "x^2" || s == "x2") {
                    e.index = 3;
                    return e;
                }
                throw ParseError("unknown F_4 label '" + s + "'", where);
            }
            auto slash = s.find('/');
            if (slash == std::string::npos) return field.from_integer(Int(s));
            return field.from_rational(Int(s.substr(0, slash)), Int(s.substr(slash + 1)));
        }
        throw ParseError("expected a finite field element", where);
    }
    // p-adic
    if (j.is_number_integer()) return field.from_integer(Int(j.get<std::int64_t>()));
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        try {
            auto slash = s.find('/');
            if (slash == std::string::npos) return field.from_integer(Int(s));
            return field.from_rational(Int(s.substr(0, slash)), Int(s.substr(slash + 1)));
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(std::string("bad element: ") + e.what(), where);
        }
    }
    if (j.is_object()) {
        FieldElement e;
        e.padic = true;
        e.valuation = static_cast<int>(need_int(j, "v", where));
        const Json& digits = need(j, "digits", where);
        if (!digits.is_array()) throw ParseError("digits must be an array", where);
        for (const auto& d : digits) {
            if (!d.is_number_integer() || d.get<std::int64_t>() < 0)
                throw ParseError("digits must be nonnegative integers", where);
            e.digits.push_back(static_cast<std::uint32_t>(d.get<std::int64_t>()));
        }
        field.check_canonical(e);
        return e;
    }
    throw ParseError("expected a p-adic element (integer, \"num/den\", or {v, digits})",
                     where);
}

Json element_to_json(const Field& field, const FieldElement& e) {
    if (field.is_finite()) {
        if (field.desc().q == 4 && e.index >= 2)
            return e.index == 2 ? Json("x") : Json("x^2");
        return Json(e.index);
    }
    if (e.zero) return Json(0);
    Json j;
    j["v"] = e.valuation;
    j["digits"] = e.digits;
    return j;
}

Point parse_point_obj(const Space& space, const Json& j, const std::string& where) {
    if (!j.is_array() || j.size() != space.dim())
        throw ParseError("expected an array of " + std::to_string(space.dim()) +
                             " coordinates",
                         where);
    Point x;
    for (std::size_t i = 0; i < j.size(); ++i)
        x.coords.push_back(parse_element(space.field(), j[i],
                                         where + "[" + std::to_string(i) + "]"));
    return x;
}

Json point_to_json_obj(const Space& space, const Point& x) {
    Json j = Json::array();
    for (const auto& c : x.coords) j.push_back(element_to_json(space.field(), c));
    return j;
}

Point parse_point(const Space& space, const std::string& text) {
    return parse_point_obj(space, parse_json_text(text, "point"), "point");
}

std::string point_to_json(const Space& space, const Point& x) {
    return point_to_json_obj(space, x).dump();
}

namespace {

Matrix parse_matrix(const Space& space, const Json& j, const std::string& where) {
    if (!j.is_array() || j.size() != space.dim())
        throw ParseError("matrix must have dim rows", where);
    Matrix m;
    m.n = space.dim();
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != space.dim())
            throw ParseError("matrix row must have dim entries",
                             where + "[" + std::to_string(r) + "]");
        for (std::size_t c = 0; c < j[r].size(); ++c)
            m.entries.push_back(parse_element(
                space.field(), j[r][c],
                where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]"));
    }
    return m;
}

Json matrix_to_json(const Space& space, const Matrix& m) {
    Json rows = Json::array();
    for (std::size_t r = 0; r < m.n; ++r) {
        Json row = Json::array();
        for (std::size_t c = 0; c < m.n; ++c)
            row.push_back(element_to_json(space.field(), m.at(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

void parse_leaf(const Space& space, const Json& j, TreeNode& node,
                const std::string& where) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "identity") {
            node.leaf = LeafKind::Identity;
        } else if (s == "negation") {
            node.leaf = LeafKind::Negation;
        } else {
            throw ParseError("unknown leaf '" + s + "'", where);
        }
        return;
    }
    if (j.is_object()) {
        if (j.contains("scalar")) {
            node.leaf = LeafKind::Scalar;
            node.scalar = parse_element(space.field(), j["scalar"], where + ".scalar");
            return;
        }
        if (j.contains("matrix")) {
            node.leaf = LeafKind::Matrix;
            node.matrix = parse_matrix(space, j["matrix"], where + ".matrix");
            return;
        }
    }
    throw ParseError("expected \"identity\", \"negation\", {\"scalar\":...} or "
                     "{\"matrix\":...}",
                     where);
}

TreeNodePtr parse_node(const Space& space, const Json& j, const std::string& where) {
    if (j.is_string() && j.get<std::string>() == "identity") return nullptr;
    if (!j.is_object()) throw ParseError("expected a tree node", where);
    auto node = std::make_shared<TreeNode>();
    if (j.contains("leaf")) parse_leaf(space, j["leaf"], *node, where + ".leaf");
    if (j.contains("spheres")) {
        const Json& spheres = j["spheres"];
        if (!spheres.is_array()) throw ParseError("spheres must be an array", where);
        for (std::size_t s = 0; s < spheres.size(); ++s) {
            const std::string sw = where + ".spheres[" + std::to_string(s) + "]";
            const Json& entry = spheres[s];
            const Rational r = rat_parse(need_string(entry, "radius", sw), sw + ".radius");
            if (node->spheres.count(r)) throw ParseError("duplicate radius", sw + ".radius");
            const Json& sigma_json = need(entry, "sigma", sw);
            if (!sigma_json.is_array()) throw ParseError("sigma must be an array", sw);
            std::vector<std::size_t> sigma;
            for (const auto& v : sigma_json) {
                if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
                    throw ParseError("sigma entries must be nonnegative", sw + ".sigma");
                sigma.push_back(v.get<std::size_t>());
            }
            std::vector<TreeNodePtr> children(sigma.size());
            if (entry.contains("children")) {
                const Json& ch = entry["children"];
                if (!ch.is_array() || ch.size() != sigma.size())
                    throw ParseError("children must match sigma in length",
                                     sw + ".children");
                for (std::size_t i = 0; i < ch.size(); ++i)
                    children[i] = parse_node(space, ch[i],
                                             sw + ".children[" + std::to_string(i) + "]");
            }
            std::vector<std::optional<Point>> anchors(sigma.size());
            if (entry.contains("anchors")) {
                const Json& an = entry["anchors"];
                if (!an.is_array() || an.size() != sigma.size())
                    throw ParseError("anchors must match sigma in length",
                                     sw + ".anchors");
                for (std::size_t i = 0; i < an.size(); ++i)
                    if (!an[i].is_null())
                        anchors[i] = parse_point_obj(
                            space, an[i], sw + ".anchors[" + std::to_string(i) + "]");
            }
            node->spheres.emplace(
                r, build_sphere_action(space, r, sigma, std::move(children), anchors));
        }
    }
    if (node->spheres.empty() && node->leaf == LeafKind::Identity) return nullptr;
    return node;
}

Json node_to_json(const Space& space, const TreeNodePtr& node) {
    if (!node) return Json("identity");
    Json j;
    switch (node->leaf) {
    case LeafKind::Identity: break; // implied
    case LeafKind::Negation: j["leaf"] = "negation"; break;
    case LeafKind::Scalar:
        j["leaf"] = Json{{"scalar", element_to_json(space.field(), node->scalar)}};
        break;
    case LeafKind::Matrix:
        j["leaf"] = Json{{"matrix", matrix_to_json(space, *node->matrix)}};
        break;
    }
    if (!node->spheres.empty()) {
        Json spheres = Json::array();
        for (const auto& [r, action] : node->spheres) {
            const auto dec = decompose_sphere(space, r);
            Json entry;
            entry["radius"] = rat_str(r);
            Json sigma = Json::array();
            Json children = Json::array();
            Json anchors = Json::array();
            bool any_anchor = false;
            for (std::size_t i = 0; i < action.maps.size(); ++i) {
                const BallMap& bm = action.maps[i];
                sigma.push_back(bm.target);
                children.push_back(node_to_json(space, bm.child));
                if (bm.anchor == dec->classes[bm.target].rep) {
                    anchors.push_back(nullptr);
                } else {
                    anchors.push_back(point_to_json_obj(space, bm.anchor));
                    any_anchor = true;
                }
            }
            entry["sigma"] = std::move(sigma);
            entry["children"] = std::move(children);
            if (any_anchor) entry["anchors"] = std::move(anchors);
            spheres.push_back(std::move(entry));
        }
        j["spheres"] = std::move(spheres);
    }
    if (j.empty()) return Json("identity");
    return j;
}

} // namespace

Isometry parse_isometry_obj(const Space& space, const Json& j, const std::string& where) {
    if (!j.is_object()) throw ParseError("expected an isometry object", where);
    TreeNodePtr root = parse_node(space, j, where);
    int depth = structural_depth(root);
    if (j.contains("depth")) {
        const std::int64_t d = need_int(j, "depth", where);
        if (d < structural_depth(root))
            throw ParseError("tree structure is deeper than the declared depth",
                             where + ".depth");
        depth = static_cast<int>(d);
    }
    Isometry iso{space, std::move(root), std::max(depth, 1)};
    validate_tree(iso);
    return iso;
}

Json isometry_to_json_obj(const Isometry& iso) {
    Json j = node_to_json(iso.space, iso.root);
    if (j.is_string()) {
        Json obj;
        obj["schema"] = "1";
        obj["depth"] = iso.depth;
        return obj; // identity: no spheres, no leaf
    }
    j["schema"] = "1";
    j["depth"] = iso.depth;
    return j;
}

Isometry parse_isometry(const Space& space, const std::string& text) {
    return parse_isometry_obj(space, parse_json_text(text, "isometry"), "isometry");
}

std::string isometry_to_json(const Isometry& iso) {
    return isometry_to_json_obj(iso).dump();
}

SphereIsometrySpec parse_sphere_spec_obj(const Json& j, const std::string& where) {
    if (!j.is_object()) throw ParseError("expected a sphere isometry spec", where);
    Space domain = parse_space_obj(need(j, "space", where), where + ".space");
    Space codomain = parse_space_obj(need(j, "space2", where), where + ".space2");
    SphereIsometrySpec spec{std::move(domain), std::move(codomain),
                            rat_parse(need_string(j, "r", where), where + ".r"),
                            rat_parse(need_string(j, "rprime", where), where + ".rprime"),
                            3,
                            {}};
    if (j.contains("depth")) spec.depth = static_cast<int>(need_int(j, "depth", where));
    const Json& map = need(j, "map", where);
    if (!map.is_array() || map.empty()) throw ParseError("map must be a nonempty array",
                                                         where + ".map");
    for (std::size_t i = 0; i < map.size(); ++i) {
        const std::string mw = where + ".map[" + std::to_string(i) + "]";
        if (!map[i].is_array() || map[i].size() != 2)
            throw ParseError("map entries are [x, y] pairs", mw);
        spec.pairs.emplace_back(parse_point_obj(spec.domain, map[i][0], mw + "[0]"),
                                parse_point_obj(spec.codomain, map[i][1], mw + "[1]"));
    }
    return spec;
}

Json sphere_spec_to_json_obj(const SphereIsometrySpec& spec) {
    Json j;
    j["schema"] = "1";
    j["space"] = space_to_json_obj(spec.domain);
    j["space2"] = space_to_json_obj(spec.codomain);
    j["r"] = rat_str(spec.r);
    j["rprime"] = rat_str(spec.r_prime);
    j["depth"] = spec.depth;
    Json map = Json::array();
    for (const auto& [x, y] : spec.pairs)
        map.push_back(Json::array({point_to_json_obj(spec.domain, x),
                                   point_to_json_obj(spec.codomain, y)}));
    j["map"] = std::move(map);
    return j;
}

SphereIsometrySpec parse_sphere_spec(const std::string& text) {
    return parse_sphere_spec_obj(parse_json_text(text, "spec"), "spec");
}

std::string sphere_spec_to_json(const SphereIsometrySpec& spec) {
    return sphere_spec_to_json_obj(spec).dump();
}

std::vector<std::pair<Point, Point>> parse_point_map_obj(const Space& space, const Json& j,
                                                         const std::string& where) {
    const Json& map = need(j, "map", where);
    if (!map.is_array()) throw ParseError("map must be an array", where + ".map");
    std::vector<std::pair<Point, Point>> pairs;
    for (std::size_t i = 0; i < map.size(); ++i) {
        const std::string mw = where + ".map[" + std::to_string(i) + "]";
        if (!map[i].is_array() || map[i].size() != 2)
            throw ParseError("map entries are [x, y] pairs", mw);
        pairs.emplace_back(parse_point_obj(space, map[i][0], mw + "[0]"),
                           parse_point_obj(space, map[i][1], mw + "[1]"));
    }
    return pairs;
}

Json point_map_to_json_obj(const Space& space,
                           const std::vector<std::pair<Point, Point>>& pairs) {
    Json map = Json::array();
    for (const auto& [x, y] : pairs)
        map.push_back(
            Json::array({point_to_json_obj(space, x), point_to_json_obj(space, y)}));
    Json j;
    j["schema"] = "1";
    j["map"] = std::move(map);
    return j;
}

Json certificate_to_json_obj(const Space& space, const NonlinearityCertificate& cert) {
    Json j;
    if (cert.homogeneity) {
        j["kind"] = "homogeneity";
        j["lambda"] = element_to_json(space.field(), cert.lambda);
        j["x"] = point_to_json_obj(space, cert.x);
    } else {
        j["kind"] = "additivity";
        j["x"] = point_to_json_obj(space, cert.x);
        j["y"] = point_to_json_obj(space, cert.y);
    }
    return j;
}

} // namespace ultra
