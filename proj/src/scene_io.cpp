// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

// Scene file reader. Grammar and key reference: docs/scene_format.md.

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include "prism/bytes.hpp"
#include "prism/scene.hpp"

namespace prism {

SceneValidationError::SceneValidationError(std::vector<std::string> problems)
    : std::runtime_error([&] {
        std::string msg = "invalid scene (" + std::to_string(problems.size()) + " problem(s)):";
        for (const auto& p : problems) msg += "\n  " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

namespace {

struct Value {
  std::string text;
  std::size_t line = 0;
  std::size_t column = 0;
};

struct RawSection {
  std::string name;
  std::size_t line = 0;
  std::map<std::string, Value> pairs;
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;
  std::vector<std::array<std::uint32_t, 3>> faces;
  std::vector<std::size_t> face_lines;
};

const std::set<std::string> kSections = {"render", "camera", "material", "light", "mesh"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class LineParser {
 public:
  explicit LineParser(std::filesystem::path path) : path_(std::move(path)) {}

  [[noreturn]] void fail(std::size_t line, std::size_t column, const std::string& what) const {
    throw SceneParseError(path_.string() + ":" + std::to_string(line) + ":" +
                          std::to_string(column) + ": " + what);
  }

  // Parses `v`, `vn` and `f` records into `into`. Returns false if the line is
  // not a record.
  bool parse_record(const std::string& line, std::size_t line_no, RawSection& into) const {
    std::istringstream fields(line);
    std::string head;
    fields >> head;
    if (head != "v" && head != "vn" && head != "f") return false;
    std::vector<std::pair<std::string, std::size_t>> tokens;
    std::string tok;
    while (fields >> tok) {
      const auto pos = static_cast<std::size_t>(fields.tellg()) - tok.size();
      tokens.emplace_back(tok, pos + 1);
    }
    if (tokens.size() != 3) {
      fail(line_no, 1, "'" + head + "' record needs exactly 3 values");
    }
    if (head == "f") {
      std::array<std::uint32_t, 3> idx{};
      for (int i = 0; i < 3; ++i) {
        const auto& [t, col] = tokens[i];
        std::uint32_t v = 0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || p != t.data() + t.size()) {
          fail(line_no, col, "expected vertex index, got '" + t + "'");
        }
        idx[i] = v;
      }
      into.faces.push_back(idx);
      into.face_lines.push_back(line_no);
    } else {
      Vec3 v;
      for (int i = 0; i < 3; ++i) v[i] = number(tokens[i].first, line_no, tokens[i].second);
      (head == "v" ? into.positions : into.normals).push_back(v);
    }
    return true;
  }

  double number(const std::string& t, std::size_t line, std::size_t col) const {
    double v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || !std::isfinite(v)) {
      fail(line, col, "expected a number, got '" + t + "'");
    }
    return v;
  }

  std::vector<RawSection> parse_scene() const {
    std::ifstream in(path_);
    if (!in) throw SceneParseError(path_.string() + ": cannot open scene file");
    std::vector<RawSection> sections;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string line = raw;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string t = trim(line);
      if (t.empty()) continue;
      const std::size_t indent = line.find_first_not_of(" \t") + 1;
      if (t.front() == '[') {
        if (t.back() != ']') fail(line_no, indent, "unterminated section header");
        const std::string name = trim(t.substr(1, t.size() - 2));
        if (!kSections.count(name)) fail(line_no, indent + 1, "unknown section [" + name + "]");
        sections.push_back(RawSection{name, line_no, {}, {}, {}, {}, {}});
        continue;
      }
      if (sections.empty()) fail(line_no, indent, "content before the first section");
      RawSection& sec = sections.back();
      if (const auto eq = line.find('='); eq != std::string::npos) {
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(line_no, indent, "missing key before '='");
        if (value.empty()) fail(line_no, eq + 2, "missing value for '" + key + "'");
        const std::size_t vcol = line.find_first_not_of(" \t", eq + 1) + 1;
        if (!sec.pairs.emplace(key, Value{value, line_no, vcol}).second) {
          fail(line_no, indent, "duplicate key '" + key + "' in [" + sec.name + "]");
        }
        continue;
      }
      if (sec.name == "mesh" && parse_record(t, line_no, sec)) continue;
      fail(line_no, indent, "expected 'key = value'" +
                                std::string(sec.name == "mesh" ? " or a v/vn/f record" : ""));
    }
    return sections;
  }

  void parse_sidecar(RawSection& into) const {
    std::ifstream in(path_);
    if (!in) throw SceneParseError(path_.string() + ": cannot open mesh file");
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      const std::string t = trim(raw);
      if (t.empty()) continue;
      if (!parse_record(t, line_no, into)) {
        fail(line_no, raw.find_first_not_of(" \t") + 1, "expected a v/vn/f record");
      }
    }
  }

 private:
  std::filesystem::path path_;
};

// Builds a Scene from parsed sections, collecting every problem found.
class SceneBuilder {
 public:
  SceneBuilder(std::filesystem::path scene_path, const SceneLoadOptions& options)
      : path_(std::move(scene_path)), base_(path_.parent_path()), options_(options) {}

  Scene build(std::vector<RawSection> sections) {
    std::vector<const RawSection*> render, camera, materials, lights, meshes;
    for (const auto& s : sections) {
      if (s.name == "render") render.push_back(&s);
      if (s.name == "camera") camera.push_back(&s);
      if (s.name == "material") materials.push_back(&s);
      if (s.name == "light") lights.push_back(&s);
      if (s.name == "mesh") meshes.push_back(&s);
    }
    if (render.size() > 1) problem(render[1]->line, "more than one [render] section");
    if (camera.size() != 1) {
      problem(camera.empty() ? 0 : camera[1]->line,
              "expected exactly one [camera] section, found " + std::to_string(camera.size()));
    }

    WavelengthGrid grid;
    RenderSettings rs;
    GiSettings gi;
    if (!render.empty()) read_render(*render.front(), grid, rs, gi);
    grid_ = grid;

    Scene scene(grid);
    scene.render_settings() = rs;
    scene.gi_settings() = gi;
    if (!camera.empty()) read_camera(*camera.front(), scene);

    std::set<std::string> names;
    for (const auto* m : materials) {
      const Value* name = get(*m, "name");
      if (name && !names.insert(name->text).second) {
        problem(name->line, "duplicate material name '" + name->text + "'");
      }
      auto mat = read_material(*m);
      scene.add_material(name ? name->text : "", mat ? std::move(*mat) : Material{Lambertian{Spectrum(grid)}});
    }
    for (const auto* l : lights) {
      if (auto light = read_light(*l)) scene.add_light(std::move(*light));
    }
    if (scene.lights().size() > kMaxLights) problem(0, "too many lights");
    for (const auto* m : meshes) {
      if (auto mesh = read_mesh(*m, scene)) scene.add_mesh(std::move(*mesh));
    }

    if (!problems_.empty()) throw SceneValidationError(problems_);
    scene.finalize();
    return scene;
  }

 private:
  void problem(std::size_t line, const std::string& what) {
    problems_.push_back(path_.string() + (line ? ":" + std::to_string(line) : "") + ": " + what);
  }

  const Value* get(const RawSection& s, const std::string& key) {
    used_[&s].insert(key);
    auto it = s.pairs.find(key);
    return it == s.pairs.end() ? nullptr : &it->second;
  }

  void reject_unused(const RawSection& s) {
    for (const auto& [key, v] : s.pairs) {
      if (!used_[&s].count(key)) problem(v.line, "unknown key '" + key + "' in [" + s.name + "]");
    }
  }

  std::vector<double> numbers(const Value& v) {
    std::vector<double> out;
    std::istringstream in(v.text);
    std::string tok;
    while (in >> tok) {
      double d = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
      if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(d)) {
        throw SceneParseError(path_.string() + ":" + std::to_string(v.line) + ":" +
                              std::to_string(v.column) + ": expected number(s), got '" + v.text +
                              "'");
      }
      out.push_back(d);
    }
    return out;
  }

  std::optional<double> scalar(const RawSection& s, const std::string& key) {
    const Value* v = get(s, key);
    if (!v) return std::nullopt;
    auto n = numbers(*v);
    if (n.size() != 1) {
      problem(v->line, "'" + key + "' expects one number");
      return std::nullopt;
    }
    return n[0];
  }

  std::optional<Vec3> vec3(const RawSection& s, const std::string& key) {
    const Value* v = get(s, key);
    if (!v) return std::nullopt;
    auto n = numbers(*v);
    if (n.size() != 3) {
      problem(v->line, "'" + key + "' expects three numbers");
      return std::nullopt;
    }
    return Vec3{n[0], n[1], n[2]};
  }

  std::optional<std::filesystem::path> file(const RawSection& s, const std::string& key) {
    const Value* v = get(s, key);
    if (!v) return std::nullopt;
    std::filesystem::path p = base_ / v->text;
    if (!std::filesystem::exists(p)) {
      problem(v->line, "referenced file not found: " + p.string());
      return std::nullopt;
    }
    return p;
  }

  const CmfTable* cmf(std::size_t line) {
    if (!cmf_) {
      if (options_.data_dir.empty()) {
        problem(line, "RGB colour keys need the CIE data directory (SceneLoadOptions::data_dir)");
        return nullptr;
      }
      try {
        cmf_ = std::make_unique<CmfTable>(CmfTable::load(options_.data_dir, grid_));
      } catch (const std::exception& e) {
        problem(line, std::string("cannot load colour matching functions: ") + e.what());
        return nullptr;
      }
    }
    return cmf_.get();
  }

  void read_render(const RawSection& s, WavelengthGrid& grid, RenderSettings& rs, GiSettings& gi) {
    if (const Value* g = get(s, "grid")) {
      auto n = numbers(*g);
      if (n.size() != 3 || n[2] < 2 || n[2] != std::floor(n[2])) {
        problem(g->line, "'grid' expects 'start_nm end_nm bins' with bins >= 2");
      } else {
        try {
          grid = WavelengthGrid::make(n[0], n[1], static_cast<std::size_t>(n[2]));
        } catch (const std::invalid_argument& e) {
          problem(g->line, e.what());
        }
      }
    }
    if (auto v = scalar(s, "max_bounces")) {
      if (*v < 0 || *v > kMaxPathDepth || *v != std::floor(*v)) {
        problem(s.pairs.at("max_bounces").line,
                "max_bounces must be an integer in [0, " + std::to_string(kMaxPathDepth) + "]");
      }
      rs.max_bounces = static_cast<int>(*v);
    }
    if (auto v = scalar(s, "throughput_threshold")) {
      if (*v < 0 || *v >= 1) problem(s.pairs.at("throughput_threshold").line, "throughput_threshold must be in [0, 1)");
      rs.throughput_threshold = *v;
    }
    if (auto v = scalar(s, "shadow_epsilon")) {
      if (!(*v > 0)) problem(s.pairs.at("shadow_epsilon").line, "shadow_epsilon must be positive");
      rs.shadow_epsilon_relative = *v;
    }
    if (auto v = scalar(s, "photons_per_light")) {
      if (*v < 0) problem(s.pairs.at("photons_per_light").line, "photons_per_light must be >= 0");
      gi.photons_per_light = static_cast<std::uint64_t>(*v);
    }
    if (auto v = scalar(s, "k_nearest")) {
      if (*v < 1) problem(s.pairs.at("k_nearest").line, "k_nearest must be >= 1");
      gi.k_nearest = static_cast<int>(*v);
    }
    if (auto v = scalar(s, "max_photon_bounces")) {
      if (*v < 1) problem(s.pairs.at("max_photon_bounces").line, "max_photon_bounces must be >= 1");
      gi.max_photon_bounces = static_cast<int>(*v);
    }
    if (auto v = scalar(s, "max_search_radius")) {
      if (!(*v > 0)) problem(s.pairs.at("max_search_radius").line, "max_search_radius must be positive");
      gi.max_search_radius_relative = *v;
    }
    if (auto v = scalar(s, "seed")) gi.seed = static_cast<std::uint64_t>(*v);
    reject_unused(s);
  }

  void read_camera(const RawSection& s, Scene& scene) {
    auto pos = vec3(s, "position");
    auto target = vec3(s, "look_at");
    auto up = vec3(s, "up").value_or(Vec3{0, 1, 0});
    auto fov = scalar(s, "fov");
    auto w = scalar(s, "width");
    auto h = scalar(s, "height");
    if (!pos) problem(s.line, "[camera] needs 'position'");
    if (!target) problem(s.line, "[camera] needs 'look_at'");
    if (!w || !h || *w < 1 || *h < 1 || *w != std::floor(*w) || *h != std::floor(*h)) {
      problem(s.line, "[camera] needs integer 'width' and 'height' >= 1");
    }
    const double fov_deg = fov.value_or(45.0);
    if (!(fov_deg > 0 && fov_deg < 180)) problem(s.line, "[camera] fov must be in (0, 180) degrees");
    reject_unused(s);
    if (pos && target && w && h) {
      const Vec3 f = *target - *pos;
      if (length(f) == 0 || length(cross(f, up)) == 0) {
        problem(s.line, "[camera] look_at must differ from position and not be parallel to up");
        return;
      }
      scene.set_camera(Camera::look_at(*pos, *target, up, static_cast<int>(*w),
                                       static_cast<int>(*h), fov_deg * std::numbers::pi / 180.0));
    }
  }

  // One of `<key>`, `<key>_rgb`, `<key>_file`; `clip_hi` bounds the RGB reconstruction.
  std::optional<Spectrum> spectrum(const RawSection& s, const std::string& key, double clip_hi) {
    const Value* constant = get(s, key);
    const Value* rgb = get(s, key + "_rgb");
    const Value* path_v = get(s, key + "_file");
    const int given = (constant != nullptr) + (rgb != nullptr) + (path_v != nullptr);
    if (given != 1) {
      problem(s.line, "[" + s.name + "] needs exactly one of '" + key + "', '" + key + "_rgb', '" +
                          key + "_file'");
      return std::nullopt;
    }
    if (constant) {
      auto n = numbers(*constant);
      if (n.size() != 1) {
        problem(constant->line, "'" + key + "' expects one number");
        return std::nullopt;
      }
      return Spectrum(grid_, n[0]);
    }
    if (rgb) {
      auto n = numbers(*rgb);
      if (n.size() != 3) {
        problem(rgb->line, "'" + key + "_rgb' expects three numbers");
        return std::nullopt;
      }
      const CmfTable* table = cmf(rgb->line);
      if (!table) return std::nullopt;
      return clip_spectrum(rgb_to_spectrum({n[0], n[1], n[2]}, *table), 0.0, clip_hi,
                           options_.clip_counter);
    }
    auto p = file(s, key + "_file");
    if (!p) return std::nullopt;
    try {
      return read_two_column(*p).resample(grid_);
    } catch (const std::exception& e) {
      problem(path_v->line, e.what());
      return std::nullopt;
    }
  }

  std::optional<ComplexIor> ior(const RawSection& s, const std::string& prefix, double default_n) {
    const std::string file_key = prefix.empty() ? "ior_file" : prefix + "_ior_file";
    const std::string n_key = prefix.empty() ? "n" : prefix + "_n";
    const std::string k_key = prefix.empty() ? "k" : prefix + "_k";
    const bool has_file = s.pairs.count(file_key) > 0;
    auto n = scalar(s, n_key);
    auto k = scalar(s, k_key);
    if (has_file) {
      if (n || k) problem(s.line, "give either '" + file_key + "' or '" + n_key + "'/'" + k_key + "'");
      auto p = file(s, file_key);
      if (!p) return std::nullopt;
      try {
        return ComplexIor::load(*p, grid_);
      } catch (const std::exception& e) {
        problem(s.pairs.at(file_key).line, e.what());
        return std::nullopt;
      }
    }
    const double nv = n.value_or(default_n);
    const double kv = k.value_or(0.0);
    if (!(nv > 0) || kv < 0) {
      problem(s.line, "index of refraction needs n > 0 and k >= 0");
      return std::nullopt;
    }
    return ComplexIor::constant(grid_, nv, kv);
  }

  std::optional<Material> read_material(const RawSection& s) {
    const Value* name = get(s, "name");
    const Value* type = get(s, "type");
    if (!name) problem(s.line, "[material] needs 'name'");
    if (!type) {
      problem(s.line, "[material] needs 'type'");
      reject_unused(s);
      return std::nullopt;
    }
    std::optional<Material> out;
    if (type->text == "lambertian") {
      if (auto r = spectrum(s, "reflectance", 1.0)) {
        if (r->min_value() < 0 || r->max_value() > 1) {
          problem(s.line, "lambertian reflectance must lie in [0, 1]");
        } else {
          out = Lambertian{std::move(*r)};
        }
      }
    } else if (type->text == "dielectric") {
      auto inner = ior(s, "", 1.5);
      auto outer = ior(s, "exterior", 1.0);
      if (inner && outer) out = FresnelDielectric{std::move(*inner), std::move(*outer)};
    } else if (type->text == "tabulated") {
      if (auto p = file(s, "table")) {
        try {
          out = TabulatedBrdf::load(*p, grid_);
        } catch (const std::exception& e) {
          problem(s.pairs.at("table").line, e.what());
        }
      }
    } else {
      problem(type->line, "unknown material type '" + type->text + "'");
    }
    reject_unused(s);
    return out;
  }

  std::optional<Light> read_light(const RawSection& s) {
    const Value* type = get(s, "type");
    auto position = vec3(s, "position");
    auto direction = vec3(s, "direction");
    auto emission = spectrum(s, "emission", std::numeric_limits<double>::infinity());
    auto scale = scalar(s, "scale").value_or(1.0);
    reject_unused(s);
    if (!type) {
      problem(s.line, "[light] needs 'type'");
      return std::nullopt;
    }
    if (!(scale >= 0)) problem(s.line, "light scale must be non-negative");
    if (emission && emission->min_value() < 0) problem(s.line, "light emission must be non-negative");
    if (!emission) return std::nullopt;
    Light light{PointLight{}, *emission * scale};
    if (type->text == "point") {
      if (!position) {
        problem(s.line, "point light needs 'position'");
        return std::nullopt;
      }
      light.kind = PointLight{*position};
    } else if (type->text == "directional") {
      if (!direction || length(*direction) == 0) {
        problem(s.line, "directional light needs a non-zero 'direction'");
        return std::nullopt;
      }
      light.kind = DirectionalLight{normalize(*direction)};
    } else {
      problem(type->line, "unknown light type '" + type->text + "'");
      return std::nullopt;
    }
    return light;
  }

  std::optional<Mesh> read_mesh(const RawSection& s, const Scene& scene) {
    RawSection data = s;
    const Value* mat = get(s, "material");
    const Value* name = get(s, "name");
    if (auto p = file(s, "file")) {
      LineParser(*p).parse_sidecar(data);
    }
    reject_unused(s);
    Mesh mesh;
    mesh.name = name ? name->text : "";
    bool ok = true;
    if (!mat) {
      problem(s.line, "[mesh] needs 'material'");
      ok = false;
    } else if (auto id = scene.material_id(mat->text)) {
      mesh.material = *id;
    } else {
      problem(mat->line, "mesh references unknown material '" + mat->text + "'");
      ok = false;
    }
    if (!data.normals.empty() && data.normals.size() != data.positions.size()) {
      problem(s.line, "mesh has " + std::to_string(data.normals.size()) + " normals for " +
                          std::to_string(data.positions.size()) + " vertices");
      ok = false;
    }
    for (const auto& n : data.normals) {
      if (std::abs(length(n) - 1.0) > 1e-6) {
        problem(s.line, "mesh vertex normals must be unit length");
        ok = false;
        break;
      }
    }
    for (std::size_t f = 0; f < data.faces.size(); ++f) {
      for (auto i : data.faces[f]) {
        if (i >= data.positions.size()) {
          problem(data.face_lines[f], "face index " + std::to_string(i) + " out of range (" +
                                          std::to_string(data.positions.size()) + " vertices)");
          ok = false;
        }
      }
    }
    if (data.faces.empty()) problem(s.line, "mesh has no faces");
    if (!ok) return std::nullopt;
    mesh.positions = std::move(data.positions);
    mesh.normals = std::move(data.normals);
    mesh.indices = std::move(data.faces);
    return mesh;
  }

  std::filesystem::path path_;
  std::filesystem::path base_;
  const SceneLoadOptions& options_;
  WavelengthGrid grid_;
  std::unique_ptr<CmfTable> cmf_;
  std::vector<std::string> problems_;
  std::map<const RawSection*, std::set<std::string>> used_;
};

}  // namespace

Scene load_scene(const std::filesystem::path& path, const SceneLoadOptions& options) {
  auto sections = LineParser(path).parse_scene();
  return SceneBuilder(path, options).build(std::move(sections));
}

// ---------------------------------------------------------------------------

namespace {

void put_vec(ByteWriter& w, const Vec3& v) {
  w.put_f64(v.x);
  w.put_f64(v.y);
  w.put_f64(v.z);
}

void put_spectrum(ByteWriter& w, const Spectrum& s) {
  w.put(static_cast<std::uint32_t>(s.size()));
  for (double v : s.samples()) w.put_f64(v);
}

}  // namespace

std::vector<std::uint8_t> serialize(const Scene& scene) {
  ByteWriter w;
  w.put_f64(scene.grid().start_nm);
  w.put_f64(scene.grid().end_nm);
  w.put(static_cast<std::uint32_t>(scene.grid().bin_count));
  const Camera& c = scene.camera();
  put_vec(w, c.position);
  put_vec(w, c.forward);
  put_vec(w, c.right);
  put_vec(w, c.up);
  w.put(static_cast<std::int32_t>(c.width));
  w.put(static_cast<std::int32_t>(c.height));
  w.put_f64(c.fov);
  const RenderSettings& rs = scene.render_settings();
  w.put(static_cast<std::int32_t>(rs.max_bounces));
  w.put_f64(rs.throughput_threshold);
  w.put_f64(rs.shadow_epsilon_relative);
  const GiSettings& gi = scene.gi_settings();
  w.put(gi.photons_per_light);
  w.put(static_cast<std::int32_t>(gi.k_nearest));
  w.put(static_cast<std::int32_t>(gi.max_photon_bounces));
  w.put_f64(gi.max_search_radius_relative);
  w.put(gi.seed);

  w.put(static_cast<std::uint32_t>(scene.materials().size()));
  for (std::size_t i = 0; i < scene.materials().size(); ++i) {
    w.put_string(scene.material_names()[i]);
    const Material& m = scene.materials()[i];
    w.put(static_cast<std::uint8_t>(m.index()));
    if (const auto* l = std::get_if<Lambertian>(&m)) {
      put_spectrum(w, l->reflectance);
    } else if (const auto* d = std::get_if<FresnelDielectric>(&m)) {
      put_spectrum(w, d->ior.n);
      put_spectrum(w, d->ior.k);
      put_spectrum(w, d->exterior_ior.n);
      put_spectrum(w, d->exterior_ior.k);
    } else {
      const auto& t = std::get<TabulatedBrdf>(m);
      for (const auto* axis : {&t.theta_i(), &t.theta_o(), &t.delta_phi()}) {
        w.put(static_cast<std::uint32_t>(axis->size()));
        for (double a : *axis) w.put_f64(a);
      }
      for (const auto& v : t.values()) put_spectrum(w, v);
    }
  }
  w.put(static_cast<std::uint32_t>(scene.lights().size()));
  for (const Light& l : scene.lights()) {
    w.put(static_cast<std::uint8_t>(l.kind.index()));
    if (const auto* p = std::get_if<PointLight>(&l.kind)) {
      put_vec(w, p->position);
    } else {
      put_vec(w, std::get<DirectionalLight>(l.kind).direction);
    }
    put_spectrum(w, l.emission);
  }
  w.put(static_cast<std::uint32_t>(scene.triangles_by_id().size()));
  for (const Triangle& t : scene.triangles_by_id()) {
    for (const auto& p : t.p) put_vec(w, p);
    for (const auto& n : t.n) put_vec(w, n);
    put_vec(w, t.ng);
    w.put(t.material);
    w.put(t.id);
    w.put(static_cast<std::uint8_t>(t.smooth));
  }
  return w.take();
}

}  // namespace prism
