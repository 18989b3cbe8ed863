#include "dental/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "dental/error.hpp"
#include "json.hpp"

namespace dental {

using nlohmann::json;

LabelVolume run_segmentation(const ScalarVolume& volume, const SegmentationInputs& in) {
  const LabelVolume mask = threshold(volume, in.params.threshold);
  const ScalarVolume surface =
      in.params.flood_surface == FloodSurface::gradient_magnitude ? gradient_magnitude(volume) : volume;
  const LabelVolume regions = watershed_markers(surface, mask, in.markers, in.params.connectivity);
  LabelVolume classified = classify_regions(regions, in.markers);
  if (in.cuts.cuts.empty() && in.cuts.seeds.empty()) return classified;
  return cut_dentition(classified, in.cuts.cuts, in.cuts.seeds);
}

MeshingOutput run_meshing(const LabelVolume& labels_in, const MeshingInputs& in) {
  MeshingOutput out;
  TagResult tagged;
  if (in.boundary) {
    out.labels = labels_in;
    tagged = tag_box_faces(voxels_to_tets(out.labels), in.boundary->fixed, in.boundary->loaded);
  } else {
    const ProsthesisSpec& spec = in.prosthesis;
    const bool bridge = spec.supporting_teeth.size() >= 2;
    spec.validate(bridge);
    FragmentResult frag = select_fragment(labels_in, spec, in.margin_factor);
    out.warnings = frag.warnings;
    if (!frag.faces.any()) throw Error(Errc::singular_setup, "the fragment box does not cut the jaw: no clamped faces");
    LabelVolume work = keep_supporting_teeth(frag.labels, spec);
    std::map<int, double> thickness;
    for (int t : spec.supporting_teeth) thickness[t] = spec.settings(t).pdl_thickness_mm;
    work = generate_pdl(work, thickness);

    const auto pros = labels::prosthesis(spec.index);
    const bool supplied = std::find(work.data.begin(), work.data.end(), pros) != work.data.end();
    BridgeLayout layout;
    if (supplied) {
      layout = layout_bridge(work, spec);
    } else {
      BridgeResult b = build_bridge(work, spec);
      work = std::move(b.labels);
      layout = std::move(b.layout);
      out.warnings.insert(out.warnings.end(), b.warnings.begin(), b.warnings.end());
    }
    out.warnings.insert(out.warnings.end(), layout.warnings.begin(), layout.warnings.end());
    out.labels = std::move(work);
    tagged = tag_boundary(voxels_to_tets(out.labels), frag.faces, layout, spec);
  }
  out.mesh = std::move(tagged.mesh);
  out.regions = std::move(tagged.regions);
  out.warnings.insert(out.warnings.end(), tagged.warnings.begin(), tagged.warnings.end());
  out.audit = audit_mesh(out.mesh);
  return out;
}

MaterialTable with_mobility(MaterialTable table, const ProsthesisSpec& spec) {
  for (const auto& [tooth, s] : spec.teeth) table.tooth_mobility[tooth] = s.mobility_degree;
  return table;
}

SolveOutput run_solve(const TetMesh& mesh, const MaterialTable& materials, const LoadSpec& loads,
                      const CgParams& solver) {
  SolveOutput out;
  out.result = solve_static(mesh, materials, loads, solver);
  out.maxima = per_tooth_maxima(out.result.solution, mesh);
  return out;
}

std::string results_json(const SolveOutput& out) {
  const auto& sol = out.result.solution;
  json teeth = json::array();
  for (const auto& [tooth, row] : out.maxima.rows) {
    teeth.push_back({{"tooth", tooth},
                     {"max_displacement", row.max_displacement},
                     {"max_von_mises", row.max_von_mises},
                     {"elements", row.elements}});
  }
  double umax = 0.0;
  for (std::size_t n = 0; n + 2 < sol.displacement.size(); n += 3) {
    umax = std::max(umax, std::sqrt(sol.displacement[n] * sol.displacement[n] +
                                    sol.displacement[n + 1] * sol.displacement[n + 1] +
                                    sol.displacement[n + 2] * sol.displacement[n + 2]));
  }
  double vmax = 0.0;
  for (double v : sol.von_mises) vmax = std::max(vmax, v);

  json areas = json::object();
  json forces = json::object();
  for (const auto& [p, a] : out.result.loads.patch_area) areas[std::to_string(p)] = a;
  for (const auto& [p, f] : out.result.loads.patch_force) forces[std::to_string(p)] = {f.x, f.y, f.z};
  const Vec3 tf = out.result.loads.total_force;
  const Vec3 tr = out.result.total_reaction;
  return json{{"maxima", teeth},
              {"warnings", out.maxima.warnings},
              {"solver", {{"iterations", sol.report.iterations}, {"relative_residual", sol.report.relative_residual}}},
              {"loads",
               {{"patch_area_mm2", areas},
                {"patch_force_N", forces},
                {"total_force_N", {tf.x, tf.y, tf.z}},
                {"total_reaction_N", {tr.x, tr.y, tr.z}}}},
              {"field_range", {{"displacement", {0.0, umax}}, {"von_mises", {0.0, vmax}}}}}
      .dump(2);
}

}  // namespace dental
