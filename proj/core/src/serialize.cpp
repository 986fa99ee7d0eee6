#include "aos/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "aos/error.hpp"
#include "json_reader.hpp"

namespace aos {
namespace {

using detail::json;
using detail::Reader;

json to_json(const CameraIntrinsics& k) {
  return {{"width", k.width},
          {"height", k.height},
          {"focal_length", k.focal_length},
          {"principal_point", {k.principal_point.x(), k.principal_point.y()}}};
}

CameraIntrinsics intrinsics_from(const Reader& r, const json& j, const std::string& path) {
  CameraIntrinsics k;
  k.width = r.integer(r.member(j, path, "width"), Reader::join(path, "width"));
  k.height = r.integer(r.member(j, path, "height"), Reader::join(path, "height"));
  k.focal_length = r.number(r.member(j, path, "focal_length"), Reader::join(path, "focal_length"));
  const auto pp = r.numbers(r.member(j, path, "principal_point"),
                            Reader::join(path, "principal_point"), 2);
  k.principal_point = Vec2(pp[0], pp[1]);
  try {
    k.validate();
  } catch (const std::invalid_argument& e) {
    r.fail(path, e.what());
  }
  return k;
}

json to_json(const Pose& p) {
  json rot = json::array();
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      rot.push_back(p.rotation(row, col));
    }
  }
  return {{"rotation", rot}, {"position", {p.position.x(), p.position.y(), p.position.z()}}};
}

Pose pose_from(const Reader& r, const json& j, const std::string& path) {
  Pose p;
  const auto rot = r.numbers(r.member(j, path, "rotation"), Reader::join(path, "rotation"), 9);
  for (int i = 0; i < 9; ++i) {
    p.rotation(i / 3, i % 3) = rot[static_cast<std::size_t>(i)];
  }
  const auto pos = r.numbers(r.member(j, path, "position"), Reader::join(path, "position"), 3);
  p.position = Vec3(pos[0], pos[1], pos[2]);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    r.fail(path, e.what());
  }
  return p;
}

json to_json(const FocalPlane& p) {
  return {{"altitude_offset", p.altitude_offset},
          {"tilt_x_deg", p.tilt_x_deg},
          {"tilt_y_deg", p.tilt_y_deg}};
}

FocalPlane plane_from(const Reader& r, const json& j, const std::string& path) {
  FocalPlane p;
  p.altitude_offset = r.number(r.member(j, path, "altitude_offset"),
                               Reader::join(path, "altitude_offset"));
  p.tilt_x_deg = r.number_or(j, path, "tilt_x_deg", 0.0);
  p.tilt_y_deg = r.number_or(j, path, "tilt_y_deg", 0.0);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    r.fail(path, e.what());
  }
  return p;
}

json box_json(const BoundingBox& b) { return {b.xmin, b.ymin, b.xmax, b.ymax}; }

BoundingBox box_from(const Reader& r, const json& v, const std::string& path) {
  const auto c = r.numbers(v, path, 4);
  BoundingBox b{c[0], c[1], c[2], c[3]};
  if (!b.valid()) {
    r.fail(path, "box must satisfy min < max");
  }
  return b;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Parses each non-blank line of a JSON-lines file with `fn(json, path)`.
template <typename Fn>
void for_each_line(const fs::path& path, Fn&& fn) {
  const Reader r(path);
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      r.fail("line " + std::to_string(n), e.what());
    }
    fn(r, j, "line " + std::to_string(n));
  }
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(path.string(), "cannot open for reading");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError(path.string(), "cannot open for writing");
  }
  out << text;
  if (!out) {
    throw IoError(path.string(), "write failed");
  }
}

std::vector<fs::path> write_capture(const fs::path& dir, const LightFieldCapture& capture) {
  capture.validate();
  fs::create_directories(dir / "views");
  json doc;
  doc["intrinsics"] = to_json(capture.intrinsics);
  doc["poses"] = json::array();
  std::vector<fs::path> files;
  for (std::size_t i = 0; i < capture.views.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "view_%04zu", i);
    json pose = to_json(capture.views[i].pose);
    pose["id"] = id;
    doc["poses"].push_back(pose);
    const fs::path img = dir / "views" / (std::string(id) + ".pfm");
    write_pfm(img, capture.views[i].image);
    files.push_back(img);
  }
  write_text(dir / "camera.json", dump(doc));
  files.insert(files.begin(), dir / "camera.json");
  return files;
}

LightFieldCapture read_capture(const fs::path& dir) {
  const fs::path file = dir / "camera.json";
  const Reader r(file);
  const json doc = r.parse(read_text(file));
  LightFieldCapture capture;
  capture.intrinsics = intrinsics_from(r, r.member(doc, "", "intrinsics"), "intrinsics");
  const json& poses = r.array(r.member(doc, "", "poses"), "poses");
  if (poses.empty()) {
    r.fail("poses", "capture has no views");
  }
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const std::string path = Reader::index("poses", i);
    const std::string id = r.string(r.member(poses[i], path, "id"), path + ".id");
    View v;
    v.pose = pose_from(r, poses[i], path);
    v.image = read_pfm(dir / "views" / (id + ".pfm"));
    if (v.image.width != capture.intrinsics.width || v.image.height != capture.intrinsics.height) {
      r.fail(path + ".id", "image " + id + ".pfm does not match the intrinsics size");
    }
    capture.views.push_back(std::move(v));
  }
  return capture;
}

std::vector<fs::path> write_integral(const fs::path& stem, const IntegralImage& img) {
  if (stem.has_parent_path()) {
    fs::create_directories(stem.parent_path());
  }
  const fs::path pfm = stem.string() + ".pfm";
  const fs::path count = stem.string() + ".count.pgm";
  const fs::path meta = stem.string() + ".json";
  write_pfm(pfm, img.image);
  write_pgm16(count, img.count_map);
  json doc;
  doc["virtual_pose"] = to_json(img.virtual_pose);
  doc["plane"] = to_json(img.plane);
  write_text(meta, dump(doc));
  return {pfm, count, meta};
}

IntegralImage read_integral(const fs::path& stem) {
  const fs::path meta = stem.string() + ".json";
  const Reader r(meta);
  const json doc = r.parse(read_text(meta));
  IntegralImage img;
  img.virtual_pose = pose_from(r, r.member(doc, "", "virtual_pose"), "virtual_pose");
  img.plane = plane_from(r, r.member(doc, "", "plane"), "plane");
  img.image = read_pfm(stem.string() + ".pfm");
  img.count_map = read_pgm16(stem.string() + ".count.pgm");
  if (img.image.width != img.count_map.width || img.image.height != img.count_map.height) {
    throw FormatError(stem.string() + ".count.pgm", "<size>", "count map size differs from image");
  }
  return img;
}

SceneSpec detail::scene_spec_from(const Reader& r, const json& doc, const std::string& at) {
  if (!doc.is_object()) {
    r.fail(at.empty() ? "<document>" : at, "expected an object");
  }
  SceneSpec s;
  s.extent = r.number_or(doc, at, "extent", s.extent);
  s.ambient_temp = r.number_or(doc, at, "ambient_temp", s.ambient_temp);
  s.ground_altitude = r.number_or(doc, at, "ground_altitude", s.ground_altitude);
  s.ground_noise_stddev = r.number_or(doc, at, "ground_noise_stddev", s.ground_noise_stddev);
  if (const json* g = r.optional(doc, at, "ground_gradient")) {
    const auto v = r.numbers(*g, Reader::join(at, "ground_gradient"), 2);
    s.ground_gradient = Vec2(v[0], v[1]);
  }
  if (const json* seed = r.optional(doc, at, "rng_seed")) {
    s.rng_seed = r.unsigned_integer(*seed, Reader::join(at, "rng_seed"));
  }
  if (const json* persons = r.optional(doc, at, "persons")) {
    const std::string persons_at = Reader::join(at, "persons");
    r.array(*persons, persons_at);
    for (std::size_t i = 0; i < persons->size(); ++i) {
      const std::string p = Reader::index(persons_at, i);
      const json& pj = (*persons)[i];
      Person person;
      person.temperature = r.number_or(pj, p, "temperature", person.temperature);
      const json& poly = r.array(r.member(pj, p, "polygon"), p + ".polygon");
      for (std::size_t k = 0; k < poly.size(); ++k) {
        const auto v = r.numbers(poly[k], Reader::index(p + ".polygon", k), 2);
        person.polygon.emplace_back(v[0], v[1]);
      }
      s.persons.push_back(std::move(person));
    }
  }
  if (const json* occ = r.optional(doc, at, "occluders")) {
    const std::string occ_at = Reader::join(at, "occluders");
    auto& o = s.occluders;
    o.density = r.number_or(*occ, occ_at, "density", o.density);
    o.altitude = r.number_or(*occ, occ_at, "altitude", o.altitude);
    o.width = r.number_or(*occ, occ_at, "width", o.width);
    o.temp_mean = r.number_or(*occ, occ_at, "temp_mean", o.temp_mean);
    o.temp_stddev = r.number_or(*occ, occ_at, "temp_stddev", o.temp_stddev);
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    r.fail(at.empty() ? "<document>" : at, e.what());
  }
  return s;
}

SceneSpec read_scene_spec(const fs::path& path) {
  const Reader r(path);
  return detail::scene_spec_from(r, r.parse(read_text(path)), "");
}

void write_scene_spec(const fs::path& path, const SceneSpec& s) {
  json persons = json::array();
  for (const auto& p : s.persons) {
    json poly = json::array();
    for (const auto& v : p.polygon) {
      poly.push_back({v.x(), v.y()});
    }
    persons.push_back({{"polygon", poly}, {"temperature", p.temperature}});
  }
  const json doc = {{"extent", s.extent},
                    {"ambient_temp", s.ambient_temp},
                    {"ground_altitude", s.ground_altitude},
                    {"ground_gradient", {s.ground_gradient.x(), s.ground_gradient.y()}},
                    {"ground_noise_stddev", s.ground_noise_stddev},
                    {"rng_seed", s.rng_seed},
                    {"persons", persons},
                    {"occluders",
                     {{"density", s.occluders.density},
                      {"altitude", s.occluders.altitude},
                      {"width", s.occluders.width},
                      {"temp_mean", s.occluders.temp_mean},
                      {"temp_stddev", s.occluders.temp_stddev}}}};
  write_text(path, dump(doc));
}

std::vector<Label3D> read_labels3d(const fs::path& path) {
  const Reader r(path);
  const json doc = r.parse(read_text(path));
  const json& arr = r.array(r.member(doc, "", "labels"), "labels");
  std::vector<Label3D> labels;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = Reader::index("labels", i);
    Label3D l;
    l.person_id = r.integer(r.member(arr[i], p, "person_id"), p + ".person_id");
    const json& poly = r.array(r.member(arr[i], p, "polygon"), p + ".polygon");
    for (std::size_t k = 0; k < poly.size(); ++k) {
      const auto v = r.numbers(poly[k], Reader::index(p + ".polygon", k), 3);
      l.polygon.emplace_back(v[0], v[1], v[2]);
    }
    try {
      l.validate();
    } catch (const std::invalid_argument& e) {
      r.fail(p, e.what());
    }
    labels.push_back(std::move(l));
  }
  return labels;
}

void write_labels3d(const fs::path& path, std::span<const Label3D> labels) {
  json arr = json::array();
  for (const auto& l : labels) {
    json poly = json::array();
    for (const auto& v : l.polygon) {
      poly.push_back({v.x(), v.y(), v.z()});
    }
    arr.push_back({{"person_id", l.person_id}, {"polygon", poly}});
  }
  write_text(path, dump(json{{"labels", arr}}));
}

std::vector<LabelBox> read_label_boxes(const fs::path& path) {
  std::vector<LabelBox> out;
  for_each_line(path, [&](const Reader& r, const json& j, const std::string& p) {
    if (const json* cls = r.optional(j, p, "class"); cls && r.string(*cls, p + ".class") != "person") {
      r.fail(p + ".class", "only class \"person\" is supported");
    }
    LabelBox b;
    b.box = box_from(r, r.member(j, p, "bbox"), p + ".bbox");
    if (const json* id = r.optional(j, p, "person_id")) {
      b.person_id = r.integer(*id, p + ".person_id");
    }
    out.push_back(b);
  });
  return out;
}

void write_label_boxes(const fs::path& path, std::span<const LabelBox> boxes) {
  std::string text;
  for (const auto& b : boxes) {
    const json j = {{"class", "person"}, {"bbox", box_json(b.box)}, {"person_id", b.person_id}};
    text += j.dump() + "\n";
  }
  write_text(path, text);
}

std::vector<Detection> read_detections(const fs::path& path) {
  std::vector<Detection> out;
  for_each_line(path, [&](const Reader& r, const json& j, const std::string& p) {
    Detection d;
    d.bbox = box_from(r, r.member(j, p, "bbox"), p + ".bbox");
    d.confidence = r.number(r.member(j, p, "confidence"), p + ".confidence");
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
      r.fail(p + ".confidence", "must lie in [0, 1]");
    }
    if (const json* img = r.optional(j, p, "image")) {
      d.image_id = r.string(*img, p + ".image");
    }
    out.push_back(std::move(d));
  });
  return out;
}

void write_detections(const fs::path& path, std::span<const Detection> dets) {
  std::string text;
  for (const auto& d : dets) {
    const json j = {{"image", d.image_id}, {"bbox", box_json(d.bbox)}, {"confidence", d.confidence}};
    text += j.dump() + "\n";
  }
  write_text(path, text);
}

FocalPlane read_focal_plane(const fs::path& path) {
  const Reader r(path);
  return plane_from(r, r.parse(read_text(path)), "");
}

void write_focal_plane(const fs::path& path, const FocalPlane& plane) {
  write_text(path, dump(to_json(plane)));
}

}  // namespace aos
