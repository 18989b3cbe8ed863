// dentfem: batch driver for the CT -> labels -> mesh -> solution pipeline.

#include <csignal>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "dental/config.hpp"
#include "dental/error.hpp"
#include "dental/nifti.hpp"
#include "dental/pipeline.hpp"
#include "dental/service.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dental;

namespace {

constexpr int kExitModule = 1;
constexpr int kExitUsage = 2;

struct Options {
  std::string config;
  std::string input;
  std::string out_dir;
  std::optional<double> threshold;
  std::optional<double> rel_tol;
  std::optional<std::int64_t> max_iter;
  std::optional<int> workers;
  std::string listen;
  std::string data_dir;
  std::string static_dir;
  std::string solution;
  std::string output;
};

// The config file plus the directory its relative paths are resolved from.
struct Config {
  json doc = json::object();
  fs::path base = ".";

  bool has(const char* key) const { return doc.contains(key) && !doc[key].is_null(); }

  fs::path path(const char* key) const {
    const fs::path p = doc.at(key).get<std::string>();
    return p.is_absolute() ? p : base / p;
  }

  // A section given inline or as a path to a JSON file.
  std::string section(const char* key) const {
    const auto& v = doc.at(key);
    if (!v.is_string()) return v.dump();
    const auto file = path(key);
    if (!fs::exists(file)) throw Error(Errc::usage, std::string(key) + " file not found: " + file.string());
    const auto bytes = read_file(file);
    return {bytes.begin(), bytes.end()};
  }
};

Config load_config(const Options& o) {
  Config c;
  if (o.config.empty()) return c;
  if (!fs::exists(o.config)) throw Error(Errc::usage, "config file not found: " + o.config);
  const auto bytes = read_file(o.config);
  try {
    c.doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw Error(Errc::format, std::string("config: ") + e.what());
  }
  c.base = fs::path(o.config).parent_path();
  if (c.base.empty()) c.base = ".";
  return c;
}

fs::path out_dir(const Options& o, const Config& c) {
  fs::path dir = !o.out_dir.empty() ? fs::path(o.out_dir) : (c.has("out_dir") ? c.path("out_dir") : fs::path("."));
  fs::create_directories(dir);
  return dir;
}

fs::path input_path(const Options& o, const Config& c, const char* key, const fs::path& fallback) {
  if (!o.input.empty()) return o.input;
  if (c.has(key)) return c.path(key);
  if (!fallback.empty()) return fallback;
  throw Error(Errc::usage, std::string("no input given (--input or \"") + key + "\" in the config)");
}

void write_bytes(const fs::path& p, std::span<const std::uint8_t> b) { write_file(p, b); }

int cmd_segment(const Options& o) {
  const Config c = load_config(o);
  const fs::path dir = out_dir(o, c);
  const fs::path in = input_path(o, c, "input", {});
  if (!fs::exists(in)) throw Error(Errc::usage, "input volume not found: " + in.string());

  SegmentationInputs si;
  if (c.has("segmentation")) si.params = parse_segmentation_params(c.section("segmentation"));
  if (o.threshold) si.params.threshold = *o.threshold;
  if (!c.has("segmentation") && !o.threshold) throw Error(Errc::usage, "no threshold (--threshold or config)");
  if (!c.has("markers")) throw Error(Errc::usage, "no markers given in the config");
  si.markers = parse_markers(c.section("markers"));
  if (c.has("cuts")) si.cuts = parse_cuts(c.section("cuts"));

  const ScalarVolume volume = read_nifti(read_file(in));
  const LabelVolume labels = run_segmentation(volume, si);
  write_bytes(dir / "labels.nii", write_nifti(labels));

  std::map<std::uint32_t, std::int64_t> counts;
  for (auto l : labels.data) ++counts[l];
  json report = json::object();
  for (const auto& [l, n] : counts) report[l == 0 ? std::string("Background") : labels.label_names.at(l)] = n;
  write_file(dir / "segment.json", json{{"voxels", report}}.dump(2));
  std::cout << "labels written to " << (dir / "labels.nii").string() << "\n";
  for (const auto& [name, n] : report.items()) std::cout << "  " << name << ": " << n << " voxels\n";
  return 0;
}

MeshingInputs meshing_inputs(const Config& c) {
  MeshingInputs mi;
  if (c.has("prosthesis")) mi.prosthesis = parse_prosthesis(c.section("prosthesis"));
  if (c.has("margin_factor")) mi.margin_factor = c.doc["margin_factor"].get<double>();
  if (c.has("boundary")) mi.boundary = parse_boundary(c.section("boundary"));
  if (!mi.boundary && !c.has("prosthesis")) throw Error(Errc::usage, "config needs a prosthesis or a boundary");
  return mi;
}

int cmd_mesh(const Options& o) {
  const Config c = load_config(o);
  const fs::path dir = out_dir(o, c);
  const fs::path in = input_path(o, c, "labels", dir / "labels.nii");
  if (!fs::exists(in)) throw Error(Errc::usage, "label volume not found: " + in.string());

  const MeshingOutput out = run_meshing(read_label_nifti(read_file(in)), meshing_inputs(c));
  write_bytes(dir / "mesh.bin", serialize_mesh(out.mesh));
  write_file(dir / "mesh.vtk", export_vtk(out.mesh));
  write_bytes(dir / "mesh_labels.nii", write_nifti(out.labels));
  json regions = json::array();
  for (const auto& r : out.regions) regions.push_back({{"patch", r.patch}, {"name", r.name}});
  write_file(dir / "mesh.json", json{{"tets", out.mesh.tet_count()},
                                     {"nodes", out.mesh.node_count()},
                                     {"boundary_facets", out.audit.boundary_facets},
                                     {"conforming", out.audit.conforming()},
                                     {"volume_mm3", out.audit.total_volume},
                                     {"warnings", out.warnings},
                                     {"load_patches", regions}}
                                    .dump(2));
  std::cout << out.mesh.node_count() << " nodes, " << out.mesh.tet_count() << " tets, conforming: "
            << (out.audit.conforming() ? "yes" : "no") << "\n";
  for (const auto& w : out.warnings) std::cout << "warning: " << w << "\n";
  return out.audit.conforming() ? 0 : kExitModule;
}

int cmd_solve(const Options& o) {
  const Config c = load_config(o);
  const fs::path dir = out_dir(o, c);
  const fs::path in = input_path(o, c, "mesh", dir / "mesh.bin");
  if (!fs::exists(in)) throw Error(Errc::usage, "mesh not found: " + in.string());
  if (!c.has("materials")) throw Error(Errc::usage, "config needs a materials section or file");

  MaterialTable materials = parse_materials(c.section("materials"));
  if (c.has("prosthesis")) materials = with_mobility(materials, parse_prosthesis(c.section("prosthesis")));
  const LoadSpec loads = c.has("loads") ? parse_loads(c.section("loads")) : LoadSpec{};
  CgParams solver = c.has("solver") ? parse_solver(c.section("solver")) : CgParams{};
  if (o.rel_tol) solver.rel_tol = *o.rel_tol;
  if (o.max_iter) solver.max_iter = *o.max_iter;

  const TetMesh mesh = deserialize_mesh(read_file(in));
  const SolveOutput out = run_solve(mesh, materials, loads, solver);
  write_bytes(dir / "solution.bin", serialize_solution(out.result.solution));
  write_file(dir / "result.vtk", export_vtk(mesh, &out.result.solution));
  write_file(dir / "results.json", results_json(out));

  std::ostringstream table;
  table << std::left << std::setw(8) << "tooth" << std::setw(20) << "max |u| (mm)" << std::setw(20)
        << "max von Mises (MPa)" << "\n";
  for (const auto& [tooth, row] : out.maxima.rows) {
    table << std::setw(8) << tooth << std::setw(20) << std::setprecision(6) << row.max_displacement << std::setw(20)
          << row.max_von_mises << "\n";
  }
  for (const auto& w : out.maxima.warnings) table << "warning: " << w << "\n";
  write_file(dir / "maxima.txt", table.str());
  std::cout << table.str();
  std::cout << "CG: " << out.result.solution.report.iterations << " iterations, relative residual "
            << out.result.solution.report.relative_residual << "\n";
  return 0;
}

int cmd_export(const Options& o) {
  if (o.input.empty() || o.output.empty()) throw Error(Errc::usage, "export-vtk needs --input and --output");
  const TetMesh mesh = deserialize_mesh(read_file(o.input));
  if (o.solution.empty()) {
    write_file(o.output, export_vtk(mesh));
  } else {
    const Solution sol = deserialize_solution(read_file(o.solution));
    write_file(o.output, export_vtk(mesh, &sol));
  }
  return 0;
}

HttpServer* g_server = nullptr;

int cmd_serve(const Options& o) {
  const Config c = load_config(o);
  const json svc = c.has("service") ? c.doc["service"] : json::object();
  ServiceConfig sc;
  sc.data_dir = !o.data_dir.empty() ? fs::path(o.data_dir)
                                    : (svc.contains("data_dir") ? c.base / svc["data_dir"].get<std::string>()
                                                                : fs::path("dentfem-data"));
  sc.workers = o.workers.value_or(svc.value("workers", 0));
  std::string listen = !o.listen.empty() ? o.listen : svc.value("listen", std::string("127.0.0.1:8080"));
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw Error(Errc::usage, "--listen expects host:port");
  const std::string host = listen.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(Errc::usage, "--listen expects host:port");
  }
  fs::path static_dir = o.static_dir;
  if (static_dir.empty() && svc.contains("static_dir")) static_dir = c.base / svc["static_dir"].get<std::string>();

  CaseService service(sc);
  HttpServer server(service, static_dir);
  const int bound = server.bind(host, port);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::cout << "listening on " << host << ":" << bound << " (data " << sc.data_dir.string() << ", "
            << service.workers() << " workers)" << std::endl;
  server.run();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dental CT to finite-element workbench"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON pipeline config");
    sub->add_option("--input", o.input, "input file (volume, labels or mesh)");
    sub->add_option("--out-dir", o.out_dir, "output directory");
  };

  auto* seg = app.add_subcommand("segment", "threshold + marker watershed + tooth cuts -> labels.nii");
  common(seg);
  seg->add_option("--threshold", o.threshold, "intensity threshold");

  auto* mesh = app.add_subcommand("mesh", "labels -> fragment, PDL, prosthesis -> tetrahedral mesh");
  common(mesh);

  auto* solve = app.add_subcommand("solve", "mesh -> displacement, strain, stress, per-tooth maxima");
  common(solve);
  solve->add_option("--rel-tol", o.rel_tol, "CG relative residual tolerance");
  solve->add_option("--max-iter", o.max_iter, "CG iteration cap (0: 10 x dofs)");

  auto* exp = app.add_subcommand("export-vtk", "mesh (+ solution) container -> legacy VTK");
  exp->add_option("--input", o.input, "mesh.bin")->required();
  exp->add_option("--solution", o.solution, "solution.bin");
  exp->add_option("--output", o.output, "output .vtk")->required();

  auto* serve = app.add_subcommand("serve", "run the HTTP case service");
  serve->add_option("--config", o.config, "JSON config with a \"service\" section");
  serve->add_option("--listen", o.listen, "host:port (port 0 picks a free one)");
  serve->add_option("--data-dir", o.data_dir, "case store directory");
  serve->add_option("--workers", o.workers, "job worker threads (default: cores)");
  serve->add_option("--static-dir", o.static_dir, "web UI assets served under /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*seg) return cmd_segment(o);
    if (*mesh) return cmd_mesh(o);
    if (*solve) return cmd_solve(o);
    if (*exp) return cmd_export(o);
    if (*serve) return cmd_serve(o);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return e.code() == Errc::usage ? kExitUsage : kExitModule;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitModule;
  }
  return kExitUsage;
}
