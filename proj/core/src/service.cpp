#include "dental/service.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <limits>
#include <mutex>
#include <regex>
#include <shared_mutex>
#include <thread>
#include <vector>

#include "dental/config.hpp"
#include "dental/error.hpp"
#include "dental/nifti.hpp"
#include "dental/pipeline.hpp"
#include "httplib.h"
#include "json.hpp"
#include "json_util.hpp"

namespace dental {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// An Error raised while serving a request, tagged with the pipeline stage
// it concerns.
struct StageError {
  Errc code;
  std::string message;
  std::string stage;
};

[[noreturn]] void fail(Errc code, std::string message, std::string stage = "") {
  throw StageError{code, std::move(message), std::move(stage)};
}

int http_status(Errc code) {
  switch (code) {
    case Errc::reference: return 404;
    case Errc::busy:
    case Errc::sequencing: return 409;
    case Errc::io: return 500;
    default: return 400;
  }
}

json error_json(Errc code, const std::string& message, const std::string& stage) {
  return {{"code", std::string(to_string(code))}, {"message", message}, {"stage", stage}};
}

ApiResponse json_response(const json& j, int status = 200) { return {status, "application/json", j.dump()}; }

ApiResponse bytes_response(std::string body, std::string type) { return {200, std::move(type), std::move(body)}; }

double now_seconds() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

std::string read_text(const fs::path& p) {
  const auto bytes = read_file(p);
  return {bytes.begin(), bytes.end()};
}

// Write to a sibling and rename so readers never see a partial file.
void write_atomic(const fs::path& p, std::string_view data) {
  fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  write_file(tmp, data);
  fs::rename(tmp, p);
}

bool valid_name(const std::string& s) {
  static const std::regex re("[A-Za-z0-9_-]{1,64}");
  return std::regex_match(s, re);
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos < path.size()) {
    const auto next = path.find('/', pos);
    const auto end = next == std::string_view::npos ? path.size() : next;
    if (end > pos) parts.emplace_back(path.substr(pos, end - pos));
    pos = end + 1;
  }
  return parts;
}

std::string type_name(VoxelType t) {
  switch (t) {
    case VoxelType::uint8: return "uint8";
    case VoxelType::int8: return "int8";
    case VoxelType::int16: return "int16";
    case VoxelType::uint16: return "uint16";
    case VoxelType::int32: return "int32";
    case VoxelType::float32: return "float32";
  }
  return "?";
}

json volume_summary(const ScalarVolume& v) {
  const auto [lo, hi] = std::minmax_element(v.data.begin(), v.data.end());
  const auto& g = v.grid;
  return {{"dims", {g.dims.i, g.dims.j, g.dims.k}},
          {"spacing", {g.spacing.x, g.spacing.y, g.spacing.z}},
          {"origin", {g.origin.x, g.origin.y, g.origin.z}},
          {"datatype", type_name(v.storage)},
          {"min", *lo},
          {"max", *hi}};
}

double query_double(const QueryMap& q, const std::string& key, double fallback) {
  const auto it = q.find(key);
  if (it == q.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used == it->second.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  fail(Errc::parameter, "query parameter '" + key + "' must be a number", "slice");
}

std::int64_t query_int(const QueryMap& q, const std::string& key) {
  const auto it = q.find(key);
  if (it == q.end()) fail(Errc::parameter, "missing query parameter '" + key + "'");
  try {
    std::size_t used = 0;
    const auto v = std::stoll(it->second, &used);
    if (used == it->second.size()) return v;
  } catch (const std::exception&) {
  }
  fail(Errc::parameter, "query parameter '" + key + "' must be an integer");
}

}  // namespace

// ---------------------------------------------------------------------------

struct CaseService::Impl {
  struct CaseEntry {
    std::shared_mutex mutex;
    json doc;
    fs::path dir;
  };

  struct Job {
    std::string id;
    std::string case_id;
    std::string stage;
    std::string variant;
    std::string state = "queued";
    double progress = 0.0;
    json error = nullptr;
    double queued_at = 0.0;
    double started_at = 0.0;
    double finished_at = 0.0;
  };

  ServiceConfig config;
  fs::path cases_dir;

  std::mutex mu;  // cases map, jobs, queue, active
  std::condition_variable work_cv;
  std::condition_variable idle_cv;
  std::map<std::string, std::shared_ptr<CaseEntry>> cases;
  std::map<std::string, Job> jobs;
  std::map<std::string, std::string> active;  // case id -> job id
  std::deque<std::string> queue;
  int running = 0;
  bool stopping = false;
  std::int64_t next_case = 1;
  std::int64_t next_job = 1;
  std::vector<std::thread> threads;

  explicit Impl(ServiceConfig c) : config(std::move(c)) {
    if (config.workers <= 0) config.workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    cases_dir = config.data_dir / "cases";
    fs::create_directories(cases_dir);
    load_cases();
    for (int n = 0; n < config.workers; ++n) threads.emplace_back([this] { worker(); });
  }

  ~Impl() {
    {
      std::lock_guard lock(mu);
      stopping = true;
    }
    work_cv.notify_all();
    for (auto& t : threads) t.join();
  }

  // --- persistence --------------------------------------------------------

  void load_cases() {
    for (const auto& entry : fs::directory_iterator(cases_dir)) {
      const auto doc_path = entry.path() / "case.json";
      if (!entry.is_directory() || !fs::exists(doc_path)) continue;
      auto c = std::make_shared<CaseEntry>();
      c->doc = detail::parse_json(read_text(doc_path));
      c->dir = entry.path();
      const std::string id = c->doc.at("id").get<std::string>();
      cases[id] = c;
      if (id.rfind("case-", 0) == 0) {
        try {
          next_case = std::max<std::int64_t>(next_case, std::stoll(id.substr(5)) + 1);
        } catch (const std::exception&) {
        }
      }
    }
  }

  static void save(const CaseEntry& c) { write_atomic(c.dir / "case.json", c.doc.dump(2)); }

  std::shared_ptr<CaseEntry> find_case(const std::string& id) {
    std::lock_guard lock(mu);
    const auto it = cases.find(id);
    if (it == cases.end()) fail(Errc::reference, "no case '" + id + "'");
    return it->second;
  }

  // --- revisions and staleness -------------------------------------------

  static std::int64_t bump(json& doc, const std::string& input) {
    const std::int64_t rev = doc["revision"].get<std::int64_t>() + 1;
    doc["revision"] = rev;
    doc["inputs"][input] = rev;
    return rev;
  }

  static std::string seg_key(const json& doc) {
    const auto& in = doc["inputs"];
    return "vol" + std::to_string(in["volume"].get<std::int64_t>()) + "/par" +
           std::to_string(in["params"].get<std::int64_t>()) + "/mrk" +
           std::to_string(in["markers"].get<std::int64_t>()) + "/cut" + std::to_string(in["cuts"].get<std::int64_t>());
  }

  static std::string mesh_key(const json& doc, const std::string& v) {
    return seg_key(doc) + "/var" + std::to_string(doc["variants"][v]["rev"].get<std::int64_t>());
  }

  static std::string solve_key(const json& doc, const std::string& v) {
    const auto& in = doc["inputs"];
    return mesh_key(doc, v) + "/mat" + std::to_string(in["materials"].get<std::int64_t>()) + "/ld" +
           std::to_string(in["loads"].get<std::int64_t>()) + "/sol" + std::to_string(in["solver"].get<std::int64_t>());
  }

  static std::string artifact_name(const std::string& stage, const std::string& variant) {
    return variant.empty() ? stage : stage + ":" + variant;
  }

  static std::string current_key(const json& doc, const std::string& stage, const std::string& variant) {
    if (stage == "segment") return seg_key(doc);
    if (stage == "mesh") return mesh_key(doc, variant);
    return solve_key(doc, variant);
  }

  // "done", "failed", "stale" or "missing" for the stored artifact.
  static json stage_status(const json& doc, const std::string& stage, const std::string& variant) {
    const auto& arts = doc["artifacts"];
    const auto name = artifact_name(stage, variant);
    if (!arts.contains(name)) return {{"status", "missing"}};
    const auto& a = arts[name];
    if (a["key"] != current_key(doc, stage, variant)) return {{"status", "stale"}};
    json s = {{"status", a["state"]}};
    if (a.contains("error")) s["error"] = a["error"];
    return s;
  }

  static bool is_done(const json& doc, const std::string& stage, const std::string& variant) {
    return stage_status(doc, stage, variant)["status"] == "done";
  }

  json case_view(const std::string& id, CaseEntry& c) {
    std::optional<Job> job;
    {
      std::lock_guard lock(mu);
      if (auto it = active.find(id); it != active.end()) job = jobs.at(it->second);
    }
    std::shared_lock lock(c.mutex);
    json view = c.doc;
    json stages = json::object();
    stages["volume"] = c.doc["volume"].is_null()
                           ? (c.doc.contains("volume_error") ? json{{"status", "failed"}, {"error", c.doc["volume_error"]}}
                                                             : json{{"status", "missing"}})
                           : json{{"status", "done"}};
    stages["segment"] = stage_status(c.doc, "segment", "");
    json vstages = json::object();
    for (const auto& [v, _] : c.doc["variants"].items()) {
      vstages[v] = {{"mesh", stage_status(c.doc, "mesh", v)}, {"solve", stage_status(c.doc, "solve", v)}};
    }
    if (job) {
      json& target = job->variant.empty() ? stages[job->stage] : vstages[job->variant][job->stage];
      target["status"] = job->state;
      target["job"] = job->id;
    }
    view["stages"] = stages;
    view["variant_stages"] = vstages;
    return view;
  }

  // --- jobs ---------------------------------------------------------------

  json job_json(const Job& j) const {
    json t = {{"queued_at", j.queued_at}};
    if (j.started_at > 0) t["started_at"] = j.started_at;
    if (j.finished_at > 0) {
      t["finished_at"] = j.finished_at;
      t["run_seconds"] = j.finished_at - j.started_at;
    }
    return {{"id", j.id},     {"case", j.case_id},       {"stage", j.stage}, {"variant", j.variant},
            {"state", j.state}, {"progress", j.progress}, {"error", j.error}, {"timings", t}};
  }

  void check_ready(const json& doc, const std::string& stage, const std::string& variant) {
    if (stage == "segment") {
      if (doc["volume"].is_null()) fail(Errc::sequencing, "upload a volume before segmenting", stage);
      if (doc["segmentation"]["params"].is_null()) fail(Errc::sequencing, "set segmentation params first", stage);
      return;
    }
    if (variant.empty()) fail(Errc::usage, "stage '" + stage + "' needs ?variant=", stage);
    if (!doc["variants"].contains(variant)) fail(Errc::reference, "no variant '" + variant + "'", stage);
    if (stage == "mesh") {
      if (!is_done(doc, "segment", "")) fail(Errc::sequencing, "segmentation is not done", stage);
      return;
    }
    if (!is_done(doc, "mesh", variant)) fail(Errc::sequencing, "mesh for variant '" + variant + "' is not done", stage);
    if (doc["materials"].is_null()) fail(Errc::sequencing, "set materials before solving", stage);
  }

  json start_job(const std::string& case_id, const std::string& stage, const std::string& variant) {
    if (stage != "segment" && stage != "mesh" && stage != "solve") fail(Errc::usage, "unknown stage '" + stage + "'");
    auto c = find_case(case_id);
    std::lock_guard lock(mu);
    if (auto it = active.find(case_id); it != active.end()) {
      fail(Errc::busy, "case already has job " + it->second + " in progress", stage);
    }
    {
      std::shared_lock clock(c->mutex);
      check_ready(c->doc, stage, variant);
    }
    Job j;
    j.id = "job-" + std::to_string(next_job++);
    j.case_id = case_id;
    j.stage = stage;
    j.variant = variant;
    j.queued_at = now_seconds();
    jobs[j.id] = j;
    active[case_id] = j.id;
    queue.push_back(j.id);
    work_cv.notify_one();
    return job_json(j);
  }

  void worker() {
    for (;;) {
      std::string id;
      Job job;
      {
        std::unique_lock lock(mu);
        work_cv.wait(lock, [&] { return stopping || !queue.empty(); });
        if (stopping) return;
        id = queue.front();
        queue.pop_front();
        auto& j = jobs.at(id);
        j.state = "running";
        j.started_at = now_seconds();
        job = j;
        ++running;
      }
      json error = nullptr;
      try {
        execute(job);
      } catch (const StageError& e) {
        error = error_json(e.code, e.message, e.stage.empty() ? job.stage : e.stage);
      } catch (const Error& e) {
        error = error_json(e.code(), e.what(), job.stage);
      } catch (const std::exception& e) {
        error = error_json(Errc::io, e.what(), job.stage);
      }
      {
        std::lock_guard lock(mu);
        auto& j = jobs.at(id);
        j.finished_at = now_seconds();
        j.state = error.is_null() ? "done" : "failed";
        j.progress = 1.0;
        j.error = error;
        active.erase(job.case_id);
        --running;
        if (running == 0 && queue.empty()) idle_cv.notify_all();
      }
    }
  }

  void set_progress(const std::string& id, double p) {
    std::lock_guard lock(mu);
    jobs.at(id).progress = p;
  }

  // Copy inputs under a shared lock, compute unlocked, commit under an
  // exclusive lock only if the inputs did not change meanwhile.
  void execute(const Job& job) {
    auto c = find_case(job.case_id);
    json doc;
    std::string key;
    {
      std::shared_lock lock(c->mutex);
      check_ready(c->doc, job.stage, job.variant);
      doc = c->doc;
      key = current_key(doc, job.stage, job.variant);
    }
    const std::string art = artifact_name(job.stage, job.variant);
    std::map<fs::path, std::string> files;
    json failure = nullptr;
    Errc failed_code = Errc::io;
    std::string failed_message;
    try {
      if (job.stage == "segment") {
        files = run_segment(*c, doc);
      } else if (job.stage == "mesh") {
        files = run_mesh(*c, doc, job.variant);
      } else {
        files = run_solve_stage(*c, doc, job.variant);
      }
    } catch (const Error& e) {
      failure = error_json(e.code(), e.what(), job.stage);
      failed_code = e.code();
      failed_message = e.what();
    }
    set_progress(job.id, 0.9);

    std::unique_lock lock(c->mutex);
    if (current_key(c->doc, job.stage, job.variant) != key) {
      fail(Errc::sequencing, "inputs changed while the job ran; result discarded", job.stage);
    }
    if (!failure.is_null()) {
      c->doc["artifacts"][art] = {{"key", key}, {"state", "failed"}, {"error", failure}};
      save(*c);
      throw StageError{failed_code, failed_message, job.stage};
    }
    for (const auto& [path, data] : files) write_atomic(path, data);
    c->doc["artifacts"][art] = {{"key", key}, {"state", "done"}};
    save(*c);
  }

  static std::string as_string(std::span<const std::uint8_t> b) { return {b.begin(), b.end()}; }

  std::map<fs::path, std::string> run_segment(const CaseEntry& c, const json& doc) {
    const ScalarVolume volume = read_nifti(read_file(c.dir / "volume.nii"));
    SegmentationInputs in;
    const auto& seg = doc["segmentation"];
    in.params = parse_segmentation_params(seg["params"].dump());
    in.markers = parse_markers(seg["markers"].dump());
    in.cuts = parse_cuts(seg["cuts"].dump());
    const LabelVolume labels = run_segmentation(volume, in);
    return {{c.dir / "labels.nii", as_string(write_nifti(labels))}};
  }

  static MeshingInputs meshing_inputs(const json& variant) {
    MeshingInputs in;
    in.prosthesis = parse_prosthesis(variant["prosthesis"].dump());
    in.margin_factor = variant.value("margin_factor", 1.5);
    if (variant.contains("boundary") && !variant["boundary"].is_null()) {
      in.boundary = parse_boundary(variant["boundary"].dump());
    }
    return in;
  }

  std::map<fs::path, std::string> run_mesh(const CaseEntry& c, const json& doc, const std::string& v) {
    const LabelVolume labels = read_label_nifti(read_file(c.dir / "labels.nii"));
    const MeshingOutput out = run_meshing(labels, meshing_inputs(doc["variants"][v]));
    const fs::path dir = c.dir / "variants" / v;
    json report = {{"tets", out.mesh.tet_count()},
                   {"nodes", out.mesh.node_count()},
                   {"boundary_facets", out.audit.boundary_facets},
                   {"conforming", out.audit.conforming()},
                   {"volume_mm3", out.audit.total_volume},
                   {"warnings", out.warnings}};
    json regions = json::array();
    for (const auto& r : out.regions) regions.push_back({{"patch", r.patch}, {"name", r.name}});
    report["load_patches"] = regions;
    return {{dir / "mesh.bin", as_string(serialize_mesh(out.mesh))},
            {dir / "mesh.vtk", export_vtk(out.mesh)},
            {dir / "mesh_labels.nii", as_string(write_nifti(out.labels))},
            {dir / "mesh.json", report.dump(2)}};
  }

  std::map<fs::path, std::string> run_solve_stage(const CaseEntry& c, const json& doc, const std::string& v) {
    const fs::path dir = c.dir / "variants" / v;
    const TetMesh mesh = deserialize_mesh(read_file(dir / "mesh.bin"));
    const ProsthesisSpec spec = parse_prosthesis(doc["variants"][v]["prosthesis"].dump());
    const MaterialTable materials = with_mobility(parse_materials(doc["materials"].dump()), spec);
    const LoadSpec loads = parse_loads(doc["loads"].dump());
    const CgParams solver = parse_solver(doc["solver"].dump());
    const SolveOutput out = run_solve(mesh, materials, loads, solver);
    return {{dir / "solution.bin", as_string(serialize_solution(out.result.solution))},
            {dir / "result.vtk", export_vtk(mesh, &out.result.solution)},
            {dir / "results.json", results_json(out)}};
  }

  // --- request handlers ---------------------------------------------------

  json create_case(std::string_view body) {
    json meta = json::object();
    if (!body.empty()) {
      const json in = detail::parse_json(body);
      if (!in.is_object()) fail(Errc::parameter, "case metadata must be an object");
      for (const char* key : {"name", "notes"}) {
        if (in.contains(key)) {
          if (!in[key].is_string()) fail(Errc::parameter, std::string(key) + " must be a string");
          meta[key] = in[key];
        }
      }
    }
    auto c = std::make_shared<CaseEntry>();
    std::string id;
    {
      std::lock_guard lock(mu);
      id = "case-" + std::to_string(next_case++);
      c->dir = cases_dir / id;
      c->doc = {{"id", id},
                {"metadata", meta},
                {"revision", 0},
                {"inputs",
                 {{"volume", 0}, {"params", 0}, {"markers", 0}, {"cuts", 0}, {"materials", 0}, {"loads", 0}, {"solver", 0}}},
                {"volume", nullptr},
                {"segmentation",
                 {{"params", nullptr},
                  {"markers", json::parse(to_json(MarkerSet{}))},
                  {"cuts", json::parse(to_json(CutSet{}))}}},
                {"materials", nullptr},
                {"loads", json::parse(to_json(LoadSpec{}))},
                {"solver", json::parse(to_json(CgParams{}))},
                {"variants", json::object()},
                {"artifacts", json::object()}};
      fs::create_directories(c->dir);
      save(*c);
      cases[id] = c;
    }
    return {{"id", id}, {"metadata", meta}};
  }

  json list_cases() {
    std::vector<std::shared_ptr<CaseEntry>> all;
    {
      std::lock_guard lock(mu);
      for (const auto& [id, c] : cases) all.push_back(c);
    }
    json out = json::array();
    for (const auto& c : all) {
      std::shared_lock lock(c->mutex);
      out.push_back({{"id", c->doc["id"]}, {"metadata", c->doc["metadata"]}, {"revision", c->doc["revision"]}});
    }
    return out;
  }

  json upload_volume(CaseEntry& c, std::string_view body) {
    ScalarVolume volume;
    std::unique_lock lock(c.mutex);
    bump(c.doc, "volume");
    try {
      volume = read_nifti(std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
    } catch (const Error& e) {
      c.doc["volume"] = nullptr;
      c.doc["volume_error"] = error_json(e.code(), e.what(), "volume");
      save(c);
      fail(e.code(), e.what(), "volume");
    }
    write_atomic(c.dir / "volume.nii", body);
    c.doc["volume"] = volume_summary(volume);
    c.doc.erase("volume_error");
    save(c);
    return {{"revision", c.doc["revision"]}, {"volume", c.doc["volume"]}};
  }

  template <class Parse>
  json put_input(CaseEntry& c, std::string_view body, const std::string& input, json::json_pointer where, Parse parse,
                 const std::string& stage) {
    json canonical;
    try {
      canonical = json::parse(parse(body));
    } catch (const Error& e) {
      fail(e.code(), e.what(), stage);
    }
    std::unique_lock lock(c.mutex);
    if (input == "markers") {
      if (c.doc["volume"].is_null()) fail(Errc::sequencing, "upload a volume before placing markers", stage);
      const auto& d = c.doc["volume"]["dims"];
      Grid g;
      g.dims = {d[0].get<std::int64_t>(), d[1].get<std::int64_t>(), d[2].get<std::int64_t>()};
      try {
        check_marker_bounds(g, parse_markers(body));
      } catch (const Error& e) {
        fail(e.code(), e.what(), stage);
      }
    }
    const auto rev = bump(c.doc, input);
    c.doc[where] = canonical;
    save(c);
    return {{"revision", rev}};
  }

  json put_variant(CaseEntry& c, const std::string& v, std::string_view body) {
    if (!valid_name(v)) fail(Errc::parameter, "variant names use letters, digits, '_' and '-'", "mesh");
    json stored;
    try {
      const json in = detail::parse_json(body);
      if (!in.is_object() || !in.contains("prosthesis")) fail(Errc::parameter, "variant needs a prosthesis", "mesh");
      const ProsthesisSpec spec = parse_prosthesis(in["prosthesis"].dump());
      stored["prosthesis"] = json::parse(to_json(spec));
      stored["margin_factor"] = detail::guarded([&] { return in.value("margin_factor", 1.5); });
      if (in.contains("boundary") && !in["boundary"].is_null()) {
        stored["boundary"] = json::parse(to_json(parse_boundary(in["boundary"].dump())));
      } else {
        spec.validate(spec.supporting_teeth.size() >= 2);
        stored["boundary"] = nullptr;
      }
      const double m = stored["margin_factor"].get<double>();
      if (!(m >= 1.5 && m <= 2.0)) fail(Errc::parameter, "margin_factor must lie in [1.5, 2]", "mesh");
    } catch (const Error& e) {
      fail(e.code(), e.what(), "mesh");
    }
    std::unique_lock lock(c.mutex);
    const std::int64_t rev = c.doc["revision"].get<std::int64_t>() + 1;
    c.doc["revision"] = rev;
    stored["rev"] = rev;
    c.doc["variants"][v] = stored;
    save(c);
    return {{"revision", rev}};
  }

  ScalarVolume load_volume(CaseEntry& c) {
    std::shared_lock lock(c.mutex);
    if (c.doc["volume"].is_null()) fail(Errc::sequencing, "no volume uploaded", "volume");
    return read_nifti(read_file(c.dir / "volume.nii"));
  }

  ApiResponse slice(CaseEntry& c, const QueryMap& q) {
    const ScalarVolume volume = load_volume(c);
    const auto axis_it = q.find("axis");
    const auto axis = parse_axis(axis_it == q.end() ? "z" : axis_it->second);
    if (!axis) fail(Errc::parameter, "axis must be x, y or z", "slice");
    const auto index = query_int(q, "index");
    const auto [lo, hi] = std::minmax_element(volume.data.begin(), volume.data.end());
    const double window = query_double(q, "window", std::max(*hi - *lo, 1.0));
    const double level = query_double(q, "level", 0.5 * (*hi + *lo));
    if (!(window > 0.0)) fail(Errc::parameter, "window must be positive", "slice");
    const std::string overlay = q.contains("overlay") ? q.at("overlay") : "none";

    Plane<double> plane;
    try {
      plane = extract_slice(volume, *axis, index);
    } catch (const Error& e) {
      fail(e.code(), e.what(), "slice");
    }
    json pixels = json::array();
    const double base = level - 0.5 * window;
    for (double v : plane.data) {
      const double t = std::clamp((v - base) / window, 0.0, 1.0);
      pixels.push_back(static_cast<int>(std::lround(t * 255.0)));
    }
    json out = {{"axis", axis_it == q.end() ? "z" : axis_it->second},
                {"index", index},
                {"width", plane.width},
                {"height", plane.height},
                {"window", window},
                {"level", level},
                {"overlay", overlay},
                {"pixels", pixels}};

    if (overlay == "threshold") {
      double t = 0.0;
      {
        std::shared_lock lock(c.mutex);
        if (c.doc["segmentation"]["params"].is_null()) fail(Errc::sequencing, "no threshold set", "slice");
        t = c.doc["segmentation"]["params"]["threshold"].get<double>();
      }
      out["labels"] = extract_slice(threshold(volume, t), *axis, index).data;
    } else if (overlay == "labels") {
      {
        std::shared_lock lock(c.mutex);
        if (!is_done(c.doc, "segment", "")) fail(Errc::sequencing, "segmentation is not done", "slice");
      }
      out["labels"] = extract_slice(read_label_nifti(read_file(c.dir / "labels.nii")), *axis, index).data;
    } else if (overlay == "field") {
      const std::string v = q.contains("variant") ? q.at("variant") : "";
      const std::string field = q.contains("field") ? q.at("field") : "von_mises";
      if (field != "von_mises" && field != "displacement") {
        fail(Errc::parameter, "field must be von_mises or displacement", "slice");
      }
      {
        std::shared_lock lock(c.mutex);
        if (!c.doc["variants"].contains(v)) fail(Errc::reference, "no variant '" + v + "'", "slice");
        if (!is_done(c.doc, "solve", v)) fail(Errc::reference, "variant '" + v + "' is not solved", "slice");
      }
      const fs::path dir = c.dir / "variants" / v;
      const TetMesh mesh = deserialize_mesh(read_file(dir / "mesh.bin"));
      const Solution sol = deserialize_solution(read_file(dir / "solution.bin"));
      ScalarVolume values = make_scalar_volume(volume.grid, std::numeric_limits<double>::quiet_NaN());
      Index3 offset;
      for (int a = 0; a < 3; ++a) {
        offset[a] = std::llround((mesh.grid.origin[a] - volume.grid.origin[a]) / volume.grid.spacing[a]);
      }
      for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
        const Index3 m = mesh.grid.unravel(mesh.tet_voxel[t]);
        const Index3 p{m.i + offset.i, m.j + offset.j, m.k + offset.k};
        if (!volume.grid.contains(p)) continue;
        double value = 0.0;
        if (field == "von_mises") {
          value = sol.von_mises[t];
        } else {
          for (auto n : mesh.tets[t]) {
            const auto b = 3 * static_cast<std::size_t>(n);
            value = std::max(value, std::sqrt(sol.displacement[b] * sol.displacement[b] +
                                              sol.displacement[b + 1] * sol.displacement[b + 1] +
                                              sol.displacement[b + 2] * sol.displacement[b + 2]));
          }
        }
        double& cell = values.data[static_cast<std::size_t>(volume.grid.linear(p))];
        cell = std::isnan(cell) ? value : std::max(cell, value);
      }
      json field_values = json::array();
      for (double v2 : extract_slice(values, *axis, index).data) {
        field_values.push_back(std::isnan(v2) ? json(nullptr) : json(v2));
      }
      out["field"] = field;
      out["variant"] = v;
      out["values"] = field_values;
    } else if (overlay != "none") {
      fail(Errc::parameter, "overlay must be none, threshold, labels or field", "slice");
    }
    return json_response(out);
  }

  fs::path solved_file(CaseEntry& c, const std::string& v, const char* name) {
    std::shared_lock lock(c.mutex);
    if (!c.doc["variants"].contains(v)) fail(Errc::reference, "no variant '" + v + "'", "solve");
    if (!is_done(c.doc, "solve", v)) fail(Errc::reference, "variant '" + v + "' has no current solution", "solve");
    return c.dir / "variants" / v / name;
  }

  json results(CaseEntry& c, const std::string& v) {
    json r = detail::parse_json(read_text(solved_file(c, v, "results.json")));
    r["variant"] = v;
    return r;
  }

  json compare(CaseEntry& c, const QueryMap& q) {
    const auto it = q.find("variants");
    if (it == q.end() || it->second.empty()) fail(Errc::parameter, "compare needs ?variants=a,b", "solve");
    std::vector<std::string> names;
    std::size_t pos = 0;
    while (pos <= it->second.size()) {
      const auto next = it->second.find(',', pos);
      const auto end = next == std::string::npos ? it->second.size() : next;
      names.push_back(it->second.substr(pos, end - pos));
      pos = end + 1;
    }
    std::map<int, json> rows;
    for (const auto& v : names) {
      const json r = results(c, v);
      for (const auto& row : r["maxima"]) {
        auto& slot = rows[row["tooth"].get<int>()];
        if (slot.is_null()) slot = {{"tooth", row["tooth"]}, {"values", json::object()}};
        slot["values"][v] = {{"max_displacement", row["max_displacement"]}, {"max_von_mises", row["max_von_mises"]}};
      }
    }
    json table = json::array();
    for (auto& [_, row] : rows) table.push_back(row);
    return {{"variants", names}, {"rows", table}};
  }

  ApiResponse route(std::string_view method, std::string_view path, const QueryMap& q, std::string_view body) {
    const auto p = split_path(path);
    const auto n = p.size();
    const bool get = method == "GET";
    const bool put = method == "PUT";
    const bool post = method == "POST";

    if (n == 1 && p[0] == "health" && get) {
      std::lock_guard lock(mu);
      return json_response({{"status", "ok"}, {"workers", config.workers}, {"cases", cases.size()},
                            {"data_dir", config.data_dir.string()}});
    }
    if (n == 2 && p[0] == "jobs" && get) {
      std::lock_guard lock(mu);
      const auto it = jobs.find(p[1]);
      if (it == jobs.end()) fail(Errc::reference, "no job '" + p[1] + "'");
      return json_response(job_json(it->second));
    }
    if (n == 0 || p[0] != "cases") fail(Errc::reference, "no route for " + std::string(path));
    if (n == 1) {
      if (post) return json_response(create_case(body), 201);
      if (get) return json_response(list_cases());
    }
    if (n < 2) fail(Errc::usage, "method not allowed");
    auto c = find_case(p[1]);
    const std::string& id = p[1];
    if (n == 2 && get) return json_response(case_view(id, *c));
    const std::string& what = p[2];

    if (n == 3 && what == "volume") {
      if (post || put) return json_response(upload_volume(*c, body));
      if (get) {
        std::shared_lock lock(c->mutex);
        if (c->doc["volume"].is_null()) fail(Errc::reference, "no volume uploaded", "volume");
        return bytes_response(read_text(c->dir / "volume.nii"), "application/octet-stream");
      }
    }
    if (n == 3 && what == "slice" && get) return slice(*c, q);
    if (n == 4 && what == "segmentation") {
      const std::string& part = p[3];
      if (part == "labels" && get) {
        std::shared_lock lock(c->mutex);
        if (!is_done(c->doc, "segment", "")) fail(Errc::reference, "segmentation is not done", "segment");
        return bytes_response(read_text(c->dir / "labels.nii"), "application/octet-stream");
      }
      if (part == "params" || part == "markers" || part == "cuts") {
        const auto ptr = json::json_pointer("/segmentation/" + part);
        if (get) {
          std::shared_lock lock(c->mutex);
          return json_response(c->doc[ptr]);
        }
        if (put) {
          if (part == "params") {
            return json_response(put_input(*c, body, "params", ptr,
                                           [](std::string_view b) { return to_json(parse_segmentation_params(b)); },
                                           "segment"));
          }
          if (part == "markers") {
            return json_response(put_input(*c, body, "markers", ptr,
                                           [](std::string_view b) { return to_json(parse_markers(b)); }, "segment"));
          }
          return json_response(
              put_input(*c, body, "cuts", ptr, [](std::string_view b) { return to_json(parse_cuts(b)); }, "segment"));
        }
      }
    }
    if (n == 3 && (what == "materials" || what == "loads" || what == "solver")) {
      const auto ptr = json::json_pointer("/" + what);
      if (get) {
        std::shared_lock lock(c->mutex);
        return json_response(c->doc[ptr]);
      }
      if (put) {
        if (what == "materials") {
          return json_response(put_input(*c, body, what, ptr,
                                         [](std::string_view b) { return to_json(parse_materials(b)); }, "solve"));
        }
        if (what == "loads") {
          return json_response(
              put_input(*c, body, what, ptr, [](std::string_view b) { return to_json(parse_loads(b)); }, "solve"));
        }
        return json_response(
            put_input(*c, body, what, ptr, [](std::string_view b) { return to_json(parse_solver(b)); }, "solve"));
      }
    }
    if (what == "variants") {
      if (n == 3 && get) {
        std::shared_lock lock(c->mutex);
        return json_response(c->doc["variants"]);
      }
      if (n >= 4) {
        const std::string& v = p[3];
        if (n == 4 && put) return json_response(put_variant(*c, v, body));
        if (n == 4 && get) {
          std::shared_lock lock(c->mutex);
          if (!c->doc["variants"].contains(v)) fail(Errc::reference, "no variant '" + v + "'");
          return json_response(c->doc["variants"][v]);
        }
        if (n == 5 && get) {
          const std::string& leaf = p[4];
          if (leaf == "results") return json_response(results(*c, v));
          if (leaf == "vtk") return bytes_response(read_text(solved_file(*c, v, "result.vtk")), "text/plain");
          if (leaf == "solution") {
            return bytes_response(read_text(solved_file(*c, v, "solution.bin")), "application/octet-stream");
          }
          if (leaf == "mesh") {
            std::shared_lock lock(c->mutex);
            if (!c->doc["variants"].contains(v) || !is_done(c->doc, "mesh", v)) {
              fail(Errc::reference, "variant '" + v + "' has no current mesh", "mesh");
            }
            return json_response(detail::parse_json(read_text(c->dir / "variants" / v / "mesh.json")));
          }
        }
      }
    }
    if (n == 4 && what == "run" && post) {
      const std::string variant = q.contains("variant") ? q.at("variant") : "";
      return json_response(start_job(id, p[3], variant), 202);
    }
    if (n == 3 && what == "compare" && get) return json_response(compare(*c, q));
    fail(Errc::reference, "no route for " + std::string(method) + " " + std::string(path));
  }
};

CaseService::CaseService(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}
CaseService::~CaseService() = default;

ApiResponse CaseService::handle(std::string_view method, std::string_view path, const QueryMap& query,
                                std::string_view body) {
  try {
    return impl_->route(method, path, query, body);
  } catch (const StageError& e) {
    return json_response(error_json(e.code, e.message, e.stage), http_status(e.code));
  } catch (const Error& e) {
    return json_response(error_json(e.code(), e.what(), ""), http_status(e.code()));
  } catch (const std::exception& e) {
    return json_response(error_json(Errc::io, e.what(), ""), 500);
  }
}

void CaseService::wait_idle() {
  std::unique_lock lock(impl_->mu);
  impl_->idle_cv.wait(lock, [&] { return impl_->queue.empty() && impl_->running == 0; });
}

int CaseService::workers() const { return impl_->config.workers; }

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
  CaseService& service;
  httplib::Server server;

  Impl(CaseService& s, const fs::path& static_dir) : service(s) {
    if (!static_dir.empty()) server.set_mount_point("/", static_dir.string());
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      QueryMap q;
      for (const auto& [k, v] : req.params) q[k] = v;
      const ApiResponse r = service.handle(req.method, req.path, q, req.body);
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
    server.Get(R"(/.*)", handler);
    server.Post(R"(/.*)", handler);
    server.Put(R"(/.*)", handler);
    server.set_payload_max_length(std::size_t{1} << 31);
  }
};

HttpServer::HttpServer(CaseService& service, fs::path static_dir)
    : impl_(std::make_unique<Impl>(service, static_dir)) {}
HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::io, "cannot listen on " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace dental
