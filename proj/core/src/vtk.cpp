#include <charconv>
#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "dental/elasticity.hpp"
#include "dental/error.hpp"

namespace dental {

namespace {

// Shortest representation that parses back to the same double.
void put_number(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

void put_tensor(std::string& out, const Mat3& m) {
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (c > 0) out += ' ';
      put_number(out, m(r, c));
    }
    out += '\n';
  }
}

}  // namespace

std::string export_vtk(const TetMesh& mesh, const Solution* solution) {
  const std::size_t np = mesh.node_count();
  const std::size_t nc = mesh.tet_count();
  if (solution != nullptr) {
    if (solution->displacement.size() != 3 * np || solution->strain.size() != nc || solution->stress.size() != nc ||
        solution->von_mises.size() != nc) {
      throw Error(Errc::dimension, "solution does not match the mesh");
    }
  }
  std::string out;
  out.reserve(np * 60 + nc * (solution ? 400 : 40));
  out += "# vtk DataFile Version 3.0\ndental workbench result\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out += "POINTS " + std::to_string(np) + " double\n";
  for (const auto& p : mesh.nodes) {
    put_number(out, p.x);
    out += ' ';
    put_number(out, p.y);
    out += ' ';
    put_number(out, p.z);
    out += '\n';
  }
  out += "CELLS " + std::to_string(nc) + ' ' + std::to_string(5 * nc) + '\n';
  for (const auto& t : mesh.tets) {
    out += '4';
    for (auto n : t) out += ' ' + std::to_string(n);
    out += '\n';
  }
  out += "CELL_TYPES " + std::to_string(nc) + '\n';
  for (std::size_t t = 0; t < nc; ++t) out += "10\n";

  if (solution != nullptr) {
    out += "POINT_DATA " + std::to_string(np) + '\n';
    out += "VECTORS displacement double\n";
    for (std::size_t n = 0; n < np; ++n) {
      for (int c = 0; c < 3; ++c) {
        if (c > 0) out += ' ';
        put_number(out, solution->displacement[3 * n + static_cast<std::size_t>(c)]);
      }
      out += '\n';
    }
    // Arithmetic mean of incident element values; for display only.
    std::vector<double> sum(np, 0.0);
    std::vector<int> count(np, 0);
    for (std::size_t t = 0; t < nc; ++t) {
      for (auto n : mesh.tets[t]) {
        sum[static_cast<std::size_t>(n)] += solution->von_mises[t];
        ++count[static_cast<std::size_t>(n)];
      }
    }
    out += "SCALARS von_mises_nodal_display double 1\nLOOKUP_TABLE default\n";
    for (std::size_t n = 0; n < np; ++n) {
      put_number(out, count[n] > 0 ? sum[n] / count[n] : 0.0);
      out += '\n';
    }
  }

  out += "CELL_DATA " + std::to_string(nc) + '\n';
  out += "SCALARS subdomain int 1\nLOOKUP_TABLE default\n";
  for (auto l : mesh.tet_labels) out += std::to_string(l) + '\n';
  if (solution != nullptr) {
    out += "TENSORS strain double\n";
    for (const auto& e : solution->strain) put_tensor(out, e);
    out += "TENSORS stress double\n";
    for (const auto& s : solution->stress) put_tensor(out, s);
    out += "SCALARS von_mises double 1\nLOOKUP_TABLE default\n";
    for (double v : solution->von_mises) {
      put_number(out, v);
      out += '\n';
    }
  }
  return out;
}

namespace {

class Tokens {
 public:
  explicit Tokens(std::string_view text) : text_(text) {}

  bool done() {
    skip();
    return pos_ >= text_.size();
  }

  std::string_view next() {
    skip();
    if (pos_ >= text_.size()) throw Error(Errc::truncation, "VTK file ends early");
    const auto start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  std::string_view line() {
    const auto start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
    auto l = text_.substr(start, pos_ - start);
    if (pos_ < text_.size()) ++pos_;
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    return l;
  }

  double number() {
    const auto t = next();
    double v = 0.0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
      throw Error(Errc::format, "bad number in VTK file: " + std::string(t));
    }
    return v;
  }

  std::int64_t integer() {
    const auto t = next();
    std::int64_t v = 0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
      throw Error(Errc::format, "bad integer in VTK file: " + std::string(t));
    }
    return v;
  }

  void expect(std::string_view word) {
    const auto t = next();
    if (t != word) throw Error(Errc::format, "expected '" + std::string(word) + "' in VTK file, got '" + std::string(t) + "'");
  }

 private:
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

VtkGrid parse_vtk(std::string_view text) {
  Tokens tok(text);
  const auto header = tok.line();
  if (header.rfind("# vtk DataFile", 0) != 0) throw Error(Errc::format, "not a legacy VTK file");
  tok.line();  // title
  if (tok.line() != "ASCII") throw Error(Errc::format, "only ASCII VTK is supported");
  tok.expect("DATASET");
  tok.expect("UNSTRUCTURED_GRID");

  VtkGrid g;
  std::map<std::string, std::vector<double>>* section = nullptr;
  std::size_t section_count = 0;
  while (!tok.done()) {
    const auto key = tok.next();
    if (key == "POINTS") {
      const auto n = static_cast<std::size_t>(tok.integer());
      tok.next();
      g.points.resize(n);
      for (auto& p : g.points) {
        p.x = tok.number();
        p.y = tok.number();
        p.z = tok.number();
      }
    } else if (key == "CELLS") {
      const auto n = static_cast<std::size_t>(tok.integer());
      tok.integer();
      g.cells.resize(n);
      for (auto& c : g.cells) {
        const auto k = tok.integer();
        if (k < 0) throw Error(Errc::format, "negative cell size in VTK file");
        c.resize(static_cast<std::size_t>(k));
        for (auto& v : c) v = tok.integer();
      }
    } else if (key == "CELL_TYPES") {
      const auto n = static_cast<std::size_t>(tok.integer());
      g.cell_types.resize(n);
      for (auto& t : g.cell_types) t = static_cast<int>(tok.integer());
    } else if (key == "POINT_DATA") {
      section_count = static_cast<std::size_t>(tok.integer());
      section = &g.point_data;
    } else if (key == "CELL_DATA") {
      section_count = static_cast<std::size_t>(tok.integer());
      section = &g.cell_data;
    } else if (key == "SCALARS" || key == "VECTORS" || key == "TENSORS") {
      if (section == nullptr) throw Error(Errc::format, "data array outside POINT_DATA/CELL_DATA");
      const std::string name(tok.next());
      tok.next();  // type
      std::size_t comps = key == "VECTORS" ? 3 : (key == "TENSORS" ? 9 : 1);
      if (key == "SCALARS") {
        const auto rest = tok.line();
        if (rest.find_first_not_of(" \t") != std::string_view::npos) {
          comps = static_cast<std::size_t>(std::stoi(std::string(rest)));
        }
        tok.expect("LOOKUP_TABLE");
        tok.next();
      }
      auto& values = (*section)[name];
      values.resize(section_count * comps);
      for (auto& v : values) v = tok.number();
    } else {
      throw Error(Errc::format, "unsupported VTK keyword: " + std::string(key));
    }
  }
  return g;
}

std::vector<std::uint8_t> serialize_solution(const Solution& s) {
  detail::BinaryWriter w;
  w.put_bytes("DTSOLN01");
  w.put<std::uint64_t>(s.displacement.size());
  for (double v : s.displacement) w.put(v);
  w.put<std::uint64_t>(s.strain.size());
  for (const auto& m : s.strain)
    for (double v : m.a) w.put(v);
  w.put<std::uint64_t>(s.stress.size());
  for (const auto& m : s.stress)
    for (double v : m.a) w.put(v);
  w.put<std::uint64_t>(s.von_mises.size());
  for (double v : s.von_mises) w.put(v);
  w.put<std::int64_t>(s.report.iterations);
  w.put<double>(s.report.relative_residual);
  w.put<std::uint64_t>(s.report.history.size());
  for (double v : s.report.history) w.put(v);
  return w.take();
}

Solution deserialize_solution(std::span<const std::uint8_t> bytes) {
  detail::BinaryReader r(bytes);
  if (r.get_bytes(8) != "DTSOLN01") throw Error(Errc::format, "not a solution container");
  Solution s;
  s.displacement.resize(r.get_count(8));
  for (auto& v : s.displacement) v = r.get<double>();
  s.strain.resize(r.get_count(72));
  for (auto& m : s.strain)
    for (auto& v : m.a) v = r.get<double>();
  s.stress.resize(r.get_count(72));
  for (auto& m : s.stress)
    for (auto& v : m.a) v = r.get<double>();
  s.von_mises.resize(r.get_count(8));
  for (auto& v : s.von_mises) v = r.get<double>();
  s.report.iterations = r.get<std::int64_t>();
  s.report.relative_residual = r.get<double>();
  s.report.history.resize(r.get_count(8));
  for (auto& v : s.report.history) v = r.get<double>();
  if (!r.at_end()) throw Error(Errc::format, "trailing bytes after solution container");
  return s;
}

}  // namespace dental
