#include "fixtures.hpp"

namespace fixtures {

Grid grid(Index3 dims, double h, Vec3 origin) { return Grid{dims, {h, h, h}, origin}; }

LabelVolume box_labels(Index3 dims, double h, std::uint32_t label) {
  LabelVolume v = make_label_volume(grid(dims, h), label);
  if (label != 0) v.label_names[label] = labels::name(label);
  return v;
}

TetMesh bar_mesh(Index3 dims, double h) {
  const LabelVolume v = box_labels(dims, h);
  return tag_box_faces(voxels_to_tets(v), {BoxFace::z_lo}, {BoxFace::z_hi}).mesh;
}

TetMesh series_bar_mesh(Index3 dims, double h, std::int64_t split) {
  LabelVolume v = box_labels(dims, h);
  const auto tooth = labels::tooth(11);
  for (std::int64_t n = 0; n < v.grid.count(); ++n) {
    if (v.grid.unravel(n).k >= split) v.data[static_cast<std::size_t>(n)] = tooth;
  }
  v.label_names[tooth] = labels::name(tooth);
  return tag_box_faces(voxels_to_tets(v), {BoxFace::z_lo}, {BoxFace::z_hi}).mesh;
}

MaterialTable uniform_materials(double E, double nu) {
  MaterialTable t;
  for (const char* name : {"Jaw", "Tooth", "PDL", "Prosthesis", "Dentition"}) t.by_name[name] = make_material(E, nu);
  return t;
}

MaterialTable dental_materials(double e_bone, double e_pdl, double nu_pdl) {
  MaterialTable t;
  t.by_name["Jaw"] = make_material(e_bone, 0.3);
  t.by_name["Tooth"] = make_material(18600.0, 0.31);
  t.by_name["PDL"] = make_material(e_pdl, nu_pdl);
  t.by_name["Prosthesis"] = make_material(200000.0, 0.3);
  // Same ratios as the shipped 50/20/5/1 MPa presets.
  const double scale[] = {1.0, 0.4, 0.1, 0.02};
  for (int d = 0; d < 4; ++d) t.mobility[d] = make_material(e_pdl * scale[d], nu_pdl);
  return t;
}

LoadSpec pressure(double p) {
  LoadSpec l;
  l.default_traction = Traction{TractionMode::normal_pressure, p, {}};
  return l;
}

LabelVolume random_labels(std::mt19937_64& rng, Index3 dims, double fill, std::uint32_t max_label) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> pick(1, max_label);
  LabelVolume v = make_label_volume(grid(dims));
  for (auto& l : v.data) {
    if (coin(rng) < fill) l = pick(rng);
  }
  for (std::uint32_t l = 1; l <= max_label; ++l) v.label_names[l] = "Label_" + std::to_string(l);
  return v;
}

ScalarVolume random_volume(std::mt19937_64& rng, Index3 dims, double lo, double hi, VoxelType storage) {
  ScalarVolume v = make_scalar_volume(grid(dims, 0.75, {1.0, -2.0, 3.5}));
  v.storage = storage;
  if (is_integer(storage)) {
    std::uniform_int_distribution<std::int64_t> d(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi));
    for (auto& x : v.data) x = static_cast<double>(d(rng));
  } else {
    std::uniform_real_distribution<float> d(static_cast<float>(lo), static_cast<float>(hi));
    for (auto& x : v.data) x = static_cast<double>(d(rng));
  }
  return v;
}

Phantom tooth_in_bone(Index3 dims, double h, double radius_vox, std::int64_t bone_top, std::int64_t root_bottom,
                      double pdl_mm) {
  Phantom p;
  LabelVolume v = make_label_volume(grid(dims, h));
  const double ci = 0.5 * static_cast<double>(dims.i - 1);
  const double cj = 0.5 * static_cast<double>(dims.j - 1);
  const auto tooth = labels::tooth(11);
  for (std::int64_t n = 0; n < v.grid.count(); ++n) {
    const Index3 q = v.grid.unravel(n);
    const double di = static_cast<double>(q.i) - ci;
    const double dj = static_cast<double>(q.j) - cj;
    const bool in_cylinder = di * di + dj * dj <= radius_vox * radius_vox;
    auto& l = v.data[static_cast<std::size_t>(n)];
    if (in_cylinder && q.k >= root_bottom) {
      l = tooth;
    } else if (q.k < bone_top) {
      l = labels::kJaw;
    }
  }
  v.label_names[labels::kJaw] = "Jaw";
  v.label_names[tooth] = labels::name(tooth);
  p.labels = generate_pdl(v, {{11, pdl_mm}});
  p.faces = faces_touching(p.labels, labels::kJaw);
  p.spec.supporting_teeth = {11};
  p.spec.teeth[11] = ToothSettings{0, pdl_mm};
  p.layout = layout_bridge(p.labels, p.spec);
  return p;
}

SyntheticCt two_tooth_ct() {
  SyntheticCt ct;
  const Index3 dims{24, 10, 20};
  ct.volume = make_scalar_volume(grid(dims, 0.5), -1000.0);
  ct.volume.storage = VoxelType::int16;
  for (std::int64_t n = 0; n < ct.volume.grid.count(); ++n) {
    const Index3 q = ct.volume.grid.unravel(n);
    double v = q.k < 10 ? 1000.0 : -1000.0;
    const bool in_j = q.j >= 3 && q.j < 7;
    const bool in_k = q.k >= 4 && q.k < 16;
    if (in_j && in_k && ((q.i >= 5 && q.i < 9) || (q.i >= 15 && q.i < 19))) v = 2000.0;
    ct.volume.data[static_cast<std::size_t>(n)] = v;
  }
  ct.markers.markers = {{{7, 5, 8}, 1}, {{17, 5, 8}, 1}, {{1, 1, 1}, 2}};
  ct.markers.roles = {{1, MarkerRole::internal}, {2, MarkerRole::external}};
  ct.cuts = {{{5.75, 0.0, 0.0}, {1.0, 0.0, 0.0}}};
  ct.seeds = {{{7, 5, 12}, 14}, {{17, 5, 12}, 16}};
  return ct;
}

}  // namespace fixtures
