#include "dental/config.hpp"

#include "json.hpp"

#include "dental/error.hpp"
#include "json_util.hpp"

namespace dental {

using nlohmann::json;
using detail::parse_json;
using detail::guarded;

namespace {

Index3 index_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::parameter, "voxel index must be [i, j, k]");
  return {j[0].get<std::int64_t>(), j[1].get<std::int64_t>(), j[2].get<std::int64_t>()};
}

Vec3 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::parameter, "vector must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_j(const Index3& p) { return json::array({p.i, p.j, p.k}); }
json to_j(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

int int_key(const std::string& key, std::string_view what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(key, &used);
    if (used == key.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(Errc::parameter, std::string(what) + " key '" + key + "' is not an integer");
}

Material material_from(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("E") || !j.contains("nu")) {
    throw Error(Errc::parameter, "material '" + where + "' needs E and nu");
  }
  try {
    return make_material(j.at("E").get<double>(), j.at("nu").get<double>());
  } catch (const Error& e) {
    throw Error(e.code(), "material '" + where + "': " + e.what());
  }
}

json material_to(const Material& m) { return {{"E", m.E}, {"nu", m.nu}}; }

Traction traction_from(const json& j) {
  Traction t;
  if (!j.is_object()) throw Error(Errc::parameter, "traction must be an object");
  const std::string mode = j.value("mode", std::string("normal_pressure"));
  if (mode == "normal_pressure") {
    t.mode = TractionMode::normal_pressure;
  } else if (mode == "fixed_vector") {
    t.mode = TractionMode::fixed_vector;
  } else {
    throw Error(Errc::parameter, "unknown traction mode '" + mode + "'");
  }
  t.magnitude = j.value("magnitude", 100.0);
  if (j.contains("direction")) t.direction = vec_from(j.at("direction"));
  if (!std::isfinite(t.magnitude)) throw Error(Errc::parameter, "traction magnitude must be finite");
  return t;
}

json traction_to(const Traction& t) {
  json j = {{"mode", t.mode == TractionMode::normal_pressure ? "normal_pressure" : "fixed_vector"},
            {"magnitude", t.magnitude}};
  if (t.mode == TractionMode::fixed_vector) j["direction"] = to_j(t.direction);
  return j;
}

}  // namespace

SegmentationParams parse_segmentation_params(std::string_view text) {
  return guarded([&] {
    const json j = parse_json(text);
    SegmentationParams p;
    if (!j.contains("threshold")) throw Error(Errc::parameter, "segmentation params need a threshold");
    p.threshold = j.at("threshold").get<double>();
    if (!std::isfinite(p.threshold)) throw Error(Errc::parameter, "threshold must be finite");
    const int c = j.value("connectivity", 6);
    if (c == 6) {
      p.connectivity = Connectivity::six;
    } else if (c == 26) {
      p.connectivity = Connectivity::twenty_six;
    } else {
      throw Error(Errc::parameter, "connectivity must be 6 or 26");
    }
    const std::string surface = j.value("flood_surface", std::string("gradient_magnitude"));
    if (surface == "gradient_magnitude") {
      p.flood_surface = FloodSurface::gradient_magnitude;
    } else if (surface == "raw_intensity") {
      p.flood_surface = FloodSurface::raw_intensity;
    } else {
      throw Error(Errc::parameter, "flood_surface must be gradient_magnitude or raw_intensity");
    }
    return p;
  });
}

std::string to_json(const SegmentationParams& p) {
  return json{{"threshold", p.threshold},
              {"connectivity", static_cast<int>(p.connectivity)},
              {"flood_surface", p.flood_surface == FloodSurface::gradient_magnitude ? "gradient_magnitude"
                                                                                    : "raw_intensity"}}
      .dump();
}

MarkerSet parse_markers(std::string_view text) {
  return guarded([&] {
    const json j = parse_json(text);
    MarkerSet set;
    for (const auto& m : j.value("markers", json::array())) {
      const auto id = m.at("id").get<std::int64_t>();
      if (id <= 0 || id > UINT32_MAX) throw Error(Errc::parameter, "marker ids must be positive");
      set.markers.push_back({index_from(m.at("voxel")), static_cast<std::uint32_t>(id)});
    }
    const json roles_obj = j.value("roles", json::object());
    for (const auto& [key, role] : roles_obj.items()) {
      const int id = int_key(key, "marker role");
      if (id <= 0) throw Error(Errc::parameter, "marker ids must be positive");
      const auto r = role.get<std::string>();
      if (r == "internal") {
        set.roles[static_cast<std::uint32_t>(id)] = MarkerRole::internal;
      } else if (r == "external") {
        set.roles[static_cast<std::uint32_t>(id)] = MarkerRole::external;
      } else {
        throw Error(Errc::parameter, "marker role must be internal or external");
      }
    }
    return set;
  });
}

std::string to_json(const MarkerSet& set) {
  json markers = json::array();
  for (const auto& m : set.markers) markers.push_back({{"voxel", to_j(m.voxel)}, {"id", m.id}});
  json roles = json::object();
  for (const auto& [id, r] : set.roles) roles[std::to_string(id)] = r == MarkerRole::internal ? "internal" : "external";
  return json{{"markers", markers}, {"roles", roles}}.dump();
}

CutSet parse_cuts(std::string_view text) {
  return guarded([&] {
    const json j = parse_json(text);
    CutSet set;
    for (const auto& c : j.value("cuts", json::array())) set.cuts.push_back({vec_from(c.at("point")), vec_from(c.at("normal"))});
    for (const auto& s : j.value("seeds", json::array())) {
      set.seeds.push_back({index_from(s.at("voxel")), s.at("tooth").get<int>()});
    }
    return set;
  });
}

std::string to_json(const CutSet& set) {
  json cuts = json::array();
  for (const auto& c : set.cuts) cuts.push_back({{"point", to_j(c.point)}, {"normal", to_j(c.normal)}});
  json seeds = json::array();
  for (const auto& s : set.seeds) seeds.push_back({{"voxel", to_j(s.voxel)}, {"tooth", s.tooth}});
  return json{{"cuts", cuts}, {"seeds", seeds}}.dump();
}

ProsthesisSpec parse_prosthesis(std::string_view text) {
  return guarded([&] {
    const json j = parse_json(text);
    ProsthesisSpec s;
    s.index = j.value("index", 1);
    s.supporting_teeth = j.value("supporting_teeth", std::vector<int>{});
    s.crown_thickness_mm = j.value("crown_thickness_mm", s.crown_thickness_mm);
    s.pontic_teeth = j.value("pontic_teeth", std::vector<int>{});
    s.pontic_height_mm = j.value("pontic_height_mm", s.pontic_height_mm);
    s.load_center_fraction = j.value("load_center_fraction", s.load_center_fraction);
    s.coplanar_tolerance_mm = j.value("coplanar_tolerance_mm", s.coplanar_tolerance_mm);
    const json teeth_obj = j.value("teeth", json::object());
    for (const auto& [key, t] : teeth_obj.items()) {
      ToothSettings ts;
      ts.mobility_degree = t.value("mobility_degree", ts.mobility_degree);
      ts.pdl_thickness_mm = t.value("pdl_thickness_mm", ts.pdl_thickness_mm);
      s.teeth[int_key(key, "tooth")] = ts;
    }
    return s;
  });
}

std::string to_json(const ProsthesisSpec& s) {
  json teeth = json::object();
  for (const auto& [t, ts] : s.teeth) {
    teeth[std::to_string(t)] = {{"mobility_degree", ts.mobility_degree}, {"pdl_thickness_mm", ts.pdl_thickness_mm}};
  }
  return json{{"index", s.index},
              {"supporting_teeth", s.supporting_teeth},
              {"crown_thickness_mm", s.crown_thickness_mm},
              {"pontic_teeth", s.pontic_teeth},
              {"pontic_height_mm", s.pontic_height_mm},
              {"load_center_fraction", s.load_center_fraction},
              {"coplanar_tolerance_mm", s.coplanar_tolerance_mm},
              {"teeth", teeth}}
      .dump();
}

MaterialTable parse_materials(std::string_view text) {
  return guarded([&] {
    const json j = parse_json(text);
    MaterialTable t;
    const json subdomains_obj = j.value("subdomains", json::object());
    for (const auto& [name, m] : subdomains_obj.items()) {
      const bool known = name == "Jaw" || name == "Tooth" || name == "PDL" || name == "Prosthesis" ||
                         name == "Dentition" || labels::from_name(name).has_value();
      if (!known) throw Error(Errc::parameter, "unknown subdomain name '" + name + "' in materials");
      t.by_name[name] = material_from(m, name);
    }
    const json pdl_mobility_obj = j.value("pdl_mobility", json::object());
    for (const auto& [key, m] : pdl_mobility_obj.items()) {
      const int degree = int_key(key, "mobility degree");
      if (degree < 0 || degree > 3) throw Error(Errc::parameter, "mobility degree must be 0..3");
      t.mobility[degree] = material_from(m, "pdl_mobility " + key);
    }
    return t;
  });
}

std::string to_json(const MaterialTable& t) {
  json subs = json::object();
  for (const auto& [name, m] : t.by_name) subs[name] = material_to(m);
  json mob = json::object();
  for (const auto& [d, m] : t.mobility) mob[std::to_string(d)] = material_to(m);
  return json{{"subdomains", subs}, {"pdl_mobility", mob}}.dump();
}

LoadSpec parse_loads(std::string_view text) {
  return guarded([&] {
    const json j = parse_json(text);
    LoadSpec l;
    if (j.contains("default")) {
      if (j.at("default").is_null()) {
        l.default_traction.reset();
      } else {
        l.default_traction = traction_from(j.at("default"));
      }
    }
    const json patches_obj = j.value("patches", json::object());
    for (const auto& [key, t] : patches_obj.items()) {
      l.patches[int_key(key, "load patch")] = traction_from(t);
    }
    return l;
  });
}

std::string to_json(const LoadSpec& l) {
  json patches = json::object();
  for (const auto& [p, t] : l.patches) patches[std::to_string(p)] = traction_to(t);
  return json{{"default", l.default_traction ? traction_to(*l.default_traction) : json(nullptr)},
              {"patches", patches}}
      .dump();
}

CgParams parse_solver(std::string_view text) {
  return guarded([&] {
    const json j = parse_json(text);
    CgParams p;
    p.rel_tol = j.value("rel_tol", p.rel_tol);
    p.max_iter = j.value("max_iter", p.max_iter);
    if (!(p.rel_tol > 0.0 && p.rel_tol < 1.0)) throw Error(Errc::parameter, "rel_tol must lie in (0, 1)");
    if (p.max_iter < 0) throw Error(Errc::parameter, "max_iter must be >= 0");
    return p;
  });
}

std::string to_json(const CgParams& p) { return json{{"rel_tol", p.rel_tol}, {"max_iter", p.max_iter}}.dump(); }

BoxBoundary parse_boundary(std::string_view text) {
  return guarded([&] {
    const json j = parse_json(text);
    BoxBoundary b;
    auto faces = [&](const char* key, std::vector<BoxFace>& out) {
      for (const auto& f : j.value(key, json::array())) {
        const auto face = parse_face(f.get<std::string>());
        if (!face) throw Error(Errc::parameter, "unknown box face '" + f.get<std::string>() + "'");
        out.push_back(*face);
      }
    };
    faces("fixed_faces", b.fixed);
    faces("loaded_faces", b.loaded);
    return b;
  });
}

std::string to_json(const BoxBoundary& b) {
  json fixed = json::array();
  for (auto f : b.fixed) fixed.push_back(std::string(face_name(f)));
  json loaded = json::array();
  for (auto f : b.loaded) loaded.push_back(std::string(face_name(f)));
  return json{{"fixed_faces", fixed}, {"loaded_faces", loaded}}.dump();
}

std::string to_json(const MaximaTable& table) {
  json teeth = json::array();
  for (const auto& [tooth, row] : table.rows) {
    teeth.push_back({{"tooth", tooth},
                     {"max_displacement", row.max_displacement},
                     {"max_von_mises", row.max_von_mises},
                     {"elements", row.elements}});
  }
  return json{{"teeth", teeth}, {"warnings", table.warnings}}.dump();
}

std::string to_json(const SolverReport& r, bool with_history) {
  json j = {{"iterations", r.iterations}, {"relative_residual", r.relative_residual}};
  if (with_history) j["history"] = r.history;
  return j.dump();
}

}  // namespace dental
