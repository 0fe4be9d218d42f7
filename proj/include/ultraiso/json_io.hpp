#pragma once

#include <string>

#include "json.hpp"
#include "ultraiso/constructions.hpp"
#include "ultraiso/isotree.hpp"
#include "ultraiso/oracle.hpp"
#include "ultraiso/tingley.hpp"

namespace ultra {

using Json = nlohmann::json;

// All parsers throw ParseError carrying the offending field. All emitters
// produce canonical, deterministic JSON (object keys sorted, rationals as
// exact "num/den" strings, elements in canonical form).

Json parse_json_text(const std::string& text, const std::string& what);

FieldDesc parse_field_desc(const Json& j, const std::string& where);
Json field_desc_to_json(const FieldDesc& desc);

Space parse_space_obj(const Json& j, const std::string& where);
Json space_to_json_obj(const Space& space);
Space parse_space(const std::string& text);
std::string space_to_json(const Space& space);

FieldElement parse_element(const Field& field, const Json& j, const std::string& where);
Json element_to_json(const Field& field, const FieldElement& e);

Point parse_point_obj(const Space& space, const Json& j, const std::string& where);
Json point_to_json_obj(const Space& space, const Point& x);
Point parse_point(const Space& space, const std::string& text);
std::string point_to_json(const Space& space, const Point& x);

Isometry parse_isometry_obj(const Space& space, const Json& j, const std::string& where);
Json isometry_to_json_obj(const Isometry& iso);
Isometry parse_isometry(const Space& space, const std::string& text);
std::string isometry_to_json(const Isometry& iso);

SphereIsometrySpec parse_sphere_spec_obj(const Json& j, const std::string& where);
Json sphere_spec_to_json_obj(const SphereIsometrySpec& spec);
SphereIsometrySpec parse_sphere_spec(const std::string& text);
std::string sphere_spec_to_json(const SphereIsometrySpec& spec);

/// Point-pair lists: {"schema":"1","map":[[x,y],...]}.
std::vector<std::pair<Point, Point>> parse_point_map_obj(const Space& space, const Json& j,
                                                         const std::string& where);
Json point_map_to_json_obj(const Space& space,
                           const std::vector<std::pair<Point, Point>>& pairs);

Json certificate_to_json_obj(const Space& space, const NonlinearityCertificate& cert);

} // namespace ultra
