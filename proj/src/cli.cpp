#include "mvg/cli.hpp"

#include "mvg/oracle.hpp"
#include "mvg/reconstruction.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace mvg::cli {

namespace fs = std::filesystem;

namespace {

using Quad = boost::multiprecision::cpp_bin_float_quad;
using Key = std::pair<int, int>;  // curve id, sample id

json vec3(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json vec2(const Vec3& v) { return json::array({v.x(), v.y()}); }

Vec3 to_vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw UsageError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Vec3 to_point2(const json& j) {
  if (!j.is_array() || j.size() != 2) throw UsageError("expected a 2-vector");
  return {j[0].get<double>(), j[1].get<double>(), 1.0};
}

json mat3(const Mat3& m) {
  json out = json::array();
  for (int r = 0; r < 3; ++r) out.push_back(vec3(m.row(r).transpose()));
  return out;
}

Mat3 to_mat3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw UsageError("expected a 3x3 matrix");
  Mat3 m;
  for (int r = 0; r < 3; ++r) m.row(r) = to_vec3(j[r]).transpose();
  return m;
}

std::string key_name(const Key& k) { return std::to_string(k.first) + ":" + std::to_string(k.second); }

std::string number(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void dump_to(std::string& s, const json& j, bool pretty, int depth) {
  const std::string pad = pretty ? std::string(2 * (depth + 1), ' ') : "";
  const std::string close = pretty ? std::string(2 * depth, ' ') : "";
  const char* nl = pretty ? "\n" : "";
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        s += "{}";
        return;
      }
      s += "{";
      s += nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) s += std::string(",") + nl;
        first = false;
        s += pad + json(it.key()).dump() + (pretty ? ": " : ":");
        dump_to(s, it.value(), pretty, depth + 1);
      }
      s += nl + close + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        s += "[]";
        return;
      }
      const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
      s += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) s += flat ? (pretty ? ", " : ",") : std::string(",");
        if (!flat) s += nl + pad;
        dump_to(s, j[i], pretty, depth + 1);
      }
      if (!flat) s += nl + close;
      s += "]";
      return;
    }
    case json::value_t::number_float: s += number(j.get<double>()); return;
    default: s += j.dump(); return;
  }
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw UsageError("cannot write " + p.string());
  f << text;
  if (!f) throw UsageError("failed writing " + p.string());
}

// ---- dataset on disk ------------------------------------------------------

struct Dataset {
  Scene scene;
  std::vector<CameraPose> poses;
  std::vector<double> times;
  std::vector<json> drops;
  std::map<Key, LabeledSample> truth;
};

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw UsageError("dataset directory not found: " + dir);
  Dataset d;
  d.scene = scene_from_json(read_json((root / "scene.json").string()));
  const json cams = read_json((root / "cameras.json").string());
  for (const json& f : cams.at("frames")) {
    CameraPose p = CameraPose::from_center(to_mat3(f.at("R")), to_vec3(f.at("c")), d.scene.orbit.K);
    d.poses.push_back(p);
    d.times.push_back(f.at("time").get<double>());
    d.drops.push_back(f.at("dropped"));
  }
  for (const json& r : read_jsonl((root / "samples3d.jsonl").string())) {
    LabeledSample ls;
    ls.curve_id = r.at("curve_id").get<int>();
    ls.sample_id = r.at("sample_id").get<int>();
    ls.s = r.at("s").get<double>();
    ls.sample.point = to_vec3(r.at("point"));
    Frenet3& fr = ls.sample.frame;
    fr.T = to_vec3(r.at("T"));
    fr.N = to_vec3(r.at("N"));
    fr.B = to_vec3(r.at("B"));
    fr.G = r.at("G").get<double>();
    fr.K = r.at("K").get<double>();
    fr.Kdot = r.at("Kdot").get<double>();
    fr.tau = r.at("tau").get<double>();
    fr.has_normal = r.at("has_normal").get<bool>();
    d.truth[{ls.curve_id, ls.sample_id}] = ls;
  }
  return d;
}

std::map<Key, ImageCurveSample> load_view(const std::string& dir, int k) {
  std::map<Key, ImageCurveSample> out;
  const fs::path p = fs::path(dir) / "views" / (std::to_string(k) + ".jsonl");
  for (const json& r : read_jsonl(p.string())) {
    ImageCurveSample s;
    s.coords = Coords::Pixel;
    s.point.gamma = to_point2(r.at("gamma"));
    s.point.rho = r.at("depth").get<double>();
    const json& t = r.at("t");
    s.frame.t = {t.at(0).get<double>(), t.at(1).get<double>(), 0.0};
    s.frame.n = {s.frame.t.y(), -s.frame.t.x(), 0.0};
    s.frame.kappa = r.at("kappa").get<double>();
    s.frame.kappadot = r.at("kappa_dot").get<double>();
    s.frame.g = r.at("g").get<double>();
    s.g_prime = r.at("g_prime").get<double>();
    out[{r.at("curve_id").get<int>(), r.at("sample_id").get<int>()}] = s;
  }
  return out;
}

const AnalyticCurve& curve_by_id(const Scene& s, int id) {
  for (const AnalyticCurve& c : s.curves)
    if (c.id == id) return c;
  throw UsageError("sample refers to unknown curve " + std::to_string(id));
}

// ---- report pieces --------------------------------------------------------

double rel(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1.0); }
double rel(const Vec3& got, const Vec3& want) { return (got - want).norm() / std::max(want.norm(), 1.0); }

struct Stat {
  double tol = 0.0;
  bool keep_series = true;
  long count = 0;
  double max_abs = 0.0, max_rel = 0.0, sum_sq = 0.0;
  std::string worst;
  json series = json::array();

  void add(const std::string& id, double abs_err, double rel_err) {
    if (!std::isfinite(rel_err)) rel_err = abs_err = INFINITY;
    ++count;
    max_abs = std::max(max_abs, abs_err);
    sum_sq += rel_err * rel_err;
    if (rel_err > max_rel || worst.empty()) {
      if (rel_err >= max_rel) worst = id;
      max_rel = std::max(max_rel, rel_err);
    }
    if (keep_series) series.push_back(json::array({id, rel_err}));
  }
  void add(const std::string& id, double got, double want, bool) { add(id, std::abs(got - want), rel(got, want)); }
  bool pass() const { return max_rel <= tol; }
  json to_json() const {
    return {{"count", count},
            {"max_abs", max_abs},
            {"max_rel", max_rel},
            {"rms", count ? std::sqrt(sum_sq / count) : 0.0},
            {"worst_sample", worst},
            {"tolerance", tol},
            {"pass", pass()}};
  }
};

struct StatTable {
  std::map<std::string, Stat> stats;
  double tol;
  explicit StatTable(double t) : tol(t) {}
  Stat& operator[](const std::string& name) {
    auto it = stats.find(name);
    if (it == stats.end()) {
      it = stats.emplace(name, Stat{}).first;
      it->second.tol = tol;
    }
    return it->second;
  }
  bool pass() const {
    return std::all_of(stats.begin(), stats.end(), [](const auto& kv) { return kv.second.pass(); });
  }
  json to_json() const {
    json j = json::object();
    for (const auto& [k, v] : stats) j[k] = v.to_json();
    return j;
  }
  void series_into(json& out) const {
    for (const auto& [k, v] : stats)
      if (v.keep_series && !v.series.empty()) out[k] = v.series;
  }
};

void print_table(std::ostream& out, const std::string& title, const StatTable& t) {
  out << title << "\n";
  for (const auto& [k, v] : t.stats) {
    out << "  " << std::left << std::setw(28) << k << std::right << std::setw(6) << v.count << "  max_rel "
        << std::scientific << std::setprecision(3) << v.max_rel << "  tol " << v.tol << "  "
        << (v.pass() ? "PASS" : "FAIL") << "\n";
  }
  out << std::defaultfloat;
}

Vec3 plane_part(const Vec3& x, const Vec3& gamma) {
  Vec3 out = x - x.z() * gamma;
  out.z() = 0.0;
  return out;
}

Vec3 perp(const Vec3& t) { return {t.y(), -t.x(), 0.0}; }

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "mvg: " << e.what() << "\n";
  } catch (const json::exception& e) {
    err << "mvg: malformed input: " << e.what() << "\n";
  } catch (const GeometryError& e) {
    err << "mvg: " << e.what() << "\n";
  } catch (const fs::filesystem_error& e) {
    err << "mvg: " << e.what() << "\n";
  }
  return kExitUsage;
}

}  // namespace

// ---- shared ---------------------------------------------------------------

FlowPoint flow_point(const CurveJet<double>& j, const Orbit& o, double time) {
  const OrbitState<double> st = orbit_state(o, time);
  FlowPoint p;
  p.m = orbit_motion(o, time);
  p.world = j.point;
  p.Tw = j.d1.normalized();
  const Vec3 cam = st.R * (j.point - st.c);
  const Vec3 gamma = cam / cam.z();
  p.state = CurveMotionState::fixed(gamma, cam.z());
  p.t = project_tangent(st.R * p.Tw, gamma).t;
  const Vec3 Gs = st.R * j.d1;
  p.gamma_s = plane_part(Gs, gamma) / cam.z();
  p.rho_s = Gs.z();
  return p;
}

L1Input l1_input(const FlowPoint& p, double beta_t) {
  L1Input in;
  in.gamma = p.state.gamma;
  in.t = p.t;
  in.gamma_t = image_velocity(p.state, p.m).gamma_t;
  in.beta = in.gamma_t.dot(perp(p.t));
  in.beta_t = beta_t;
  const Vec3 gst = gamma_st(CurveMotionState::fixed(p.state.gamma, p.state.rho), p.gamma_s, p.rho_s, p.m);
  in.t_t = tangent_rate(p.t, gst, p.gamma_s.norm());
  in.e3_dot_Gw_t = p.state.Gw_t.z();
  in.kind = p.state.kind;
  in.depth_scale = p.state.rho;
  return in;
}

double rigid_beta_t(const Orbit& o, double time, const FlowPoint& p) {
  const oracle::OrbitViewT<Quad> view{o, Quad(time)};
  const Vec3T<Quad> G = p.world.cast<Quad>(), T = p.Tw.cast<Quad>();
  auto beta = [&](const Quad& s) {
    const Vec3T<Quad> t = view.image_tangent(G, T, s);
    return Quad(view.gamma_t(G, Vec3T<Quad>::Zero(), s).dot(Vec3T<Quad>(t.y(), -t.x(), Quad(0))));
  };
  const Quad h(1e-5);
  return double((8 * (beta(h) - beta(-h)) - (beta(2 * h) - beta(-2 * h))) / (12 * h));
}

Profile profile(const std::string& name) {
  if (name == "strict") return {name, 1e-8};
  if (name == "default") return {name, 1e-6};
  if (name == "fd") return {name, kFdTolerance};
  throw UsageError("unknown tolerance profile '" + name + "' (strict, default, fd)");
}

std::vector<int> parse_views(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw UsageError("bad view list '" + s + "'");
    }
    if (used != item.size()) throw UsageError("bad view list '" + s + "'");
    out.push_back(v);
  }
  return out;
}

std::string dump(const json& j, bool pretty) {
  std::string s;
  dump_to(s, j, pretty, 0);
  if (pretty) s += "\n";
  return s;
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw UsageError("cannot parse " + path + ": " + e.what());
  }
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read " + path);
  std::vector<json> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw UsageError("cannot parse " + path + ": " + e.what());
    }
  }
  return out;
}

json scene_to_json(const Scene& s) {
  json curves = json::array();
  for (const AnalyticCurve& c : s.curves)
    curves.push_back({{"id", c.id},
                      {"family", to_string(c.family)},
                      {"a", c.a},
                      {"b", c.b},
                      {"s0", c.s0},
                      {"s1", c.s1},
                      {"samples", c.samples},
                      {"center", vec3(c.center)},
                      {"rotation", vec3(c.rotation)}});
  json quadrics = json::array();
  for (const Quadric& q : s.quadrics)
    quadrics.push_back({{"id", q.id},
                        {"kind", q.kind == Quadric::Kind::Sphere ? "sphere" : "ellipsoid"},
                        {"center", vec3(q.center)},
                        {"semi_axes", vec3(q.semi_axes)}});
  const Orbit& o = s.orbit;
  return {{"curves", curves},
          {"quadrics", quadrics},
          {"orbit",
           {{"center", vec3(o.center)},
            {"axis", vec3(o.axis)},
            {"radius", o.radius},
            {"elevation", o.elevation},
            {"frames", o.frames},
            {"angular_rate", o.angular_rate},
            {"phase", o.phase}}},
          {"intrinsics",
           {{"alpha_u", o.K.alpha_u},
            {"alpha_v", o.K.alpha_v},
            {"skew", o.K.skew},
            {"u0", o.K.u0},
            {"v0", o.K.v0},
            {"width", o.image_width},
            {"height", o.image_height}}},
          {"generator_samples", s.generator_samples}};
}

Scene scene_from_json(const json& j) {
  if (!j.is_object()) throw UsageError("scene config must be a JSON object");
  Scene s = default_scene();
  auto num = [](const json& o, const char* k, double& v) {
    if (o.contains(k)) v = o.at(k).get<double>();
  };
  auto integer = [](const json& o, const char* k, int& v) {
    if (o.contains(k)) v = o.at(k).get<int>();
  };
  auto v3 = [](const json& o, const char* k, Vec3& v) {
    if (o.contains(k)) v = to_vec3(o.at(k));
  };
  try {
    if (j.contains("curves")) {
      s.curves.clear();
      for (const json& c : j.at("curves")) {
        AnalyticCurve a;
        a.id = static_cast<int>(s.curves.size());
        integer(c, "id", a.id);
        a.family = curve_family_from_string(c.at("family").get<std::string>());
        num(c, "a", a.a);
        num(c, "b", a.b);
        num(c, "s0", a.s0);
        num(c, "s1", a.s1);
        integer(c, "samples", a.samples);
        v3(c, "center", a.center);
        v3(c, "rotation", a.rotation);
        s.curves.push_back(a);
      }
    }
    if (j.contains("quadrics")) {
      s.quadrics.clear();
      for (const json& q : j.at("quadrics")) {
        Quadric a;
        a.id = static_cast<int>(s.quadrics.size());
        integer(q, "id", a.id);
        const std::string kind = q.at("kind").get<std::string>();
        if (kind == "sphere") {
          a.kind = Quadric::Kind::Sphere;
        } else if (kind == "ellipsoid") {
          a.kind = Quadric::Kind::Ellipsoid;
        } else {
          throw UsageError("unknown quadric kind '" + kind + "'");
        }
        v3(q, "center", a.center);
        v3(q, "semi_axes", a.semi_axes);
        s.quadrics.push_back(a);
      }
    }
    if (j.contains("orbit")) {
      const json& o = j.at("orbit");
      v3(o, "center", s.orbit.center);
      v3(o, "axis", s.orbit.axis);
      num(o, "radius", s.orbit.radius);
      num(o, "elevation", s.orbit.elevation);
      integer(o, "frames", s.orbit.frames);
      num(o, "angular_rate", s.orbit.angular_rate);
      num(o, "phase", s.orbit.phase);
    }
    if (j.contains("intrinsics")) {
      const json& k = j.at("intrinsics");
      num(k, "alpha_u", s.orbit.K.alpha_u);
      num(k, "alpha_v", s.orbit.K.alpha_v);
      num(k, "skew", s.orbit.K.skew);
      num(k, "u0", s.orbit.K.u0);
      num(k, "v0", s.orbit.K.v0);
      integer(k, "width", s.orbit.image_width);
      integer(k, "height", s.orbit.image_height);
    }
    integer(j, "generator_samples", s.generator_samples);
    s.validate();
  } catch (const GeometryError& e) {
    throw UsageError(std::string("invalid scene: ") + e.what());
  } catch (const json::exception& e) {
    throw UsageError(std::string("invalid scene: ") + e.what());
  }
  if (s.generator_samples < 3) throw UsageError("invalid scene: generator_samples must be at least 3");
  return s;
}

// ---- generate -------------------------------------------------------------

int cmd_generate(const GenerateOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Scene scene = opt.scene ? scene_from_json(read_json(*opt.scene)) : default_scene();
    if (opt.frames) {
      if (*opt.frames < 1) throw UsageError("--frames must be at least 1");
      scene.orbit.frames = *opt.frames;
    }
    scene.validate();
    const fs::path root(opt.out);
    fs::create_directories(root / "views");

    const std::vector<LabeledSample> samples = sample_scene(scene);
    const std::vector<CameraPose> poses = camera_orbit(scene);

    std::string lines;
    for (const LabeledSample& ls : samples) {
      const Frenet3& f = ls.sample.frame;
      lines += dump({{"curve_id", ls.curve_id},
                     {"sample_id", ls.sample_id},
                     {"s", ls.s},
                     {"point", vec3(ls.sample.point)},
                     {"T", vec3(f.T)},
                     {"N", vec3(f.N)},
                     {"B", vec3(f.B)},
                     {"G", f.G},
                     {"K", f.K},
                     {"Kdot", f.Kdot},
                     {"tau", f.tau},
                     {"has_normal", f.has_normal}},
                    false) +
               "\n";
    }
    write_text(root / "samples3d.jsonl", lines);

    json frames = json::array();
    int total_drops = 0, total_rendered = 0;
    for (int k = 0; k < static_cast<int>(poses.size()); ++k) {
      const CameraPose& pose = poses[k];
      const RenderResult r = render_view(samples, pose, scene.orbit.image_width, scene.orbit.image_height);
      std::string view;
      for (const RenderedSample& s : r.samples) {
        const Frenet3& w = s.world.frame;
        view += dump({{"curve_id", s.curve_id},
                      {"sample_id", s.sample_id},
                      {"frame_id", k},
                      {"gamma", vec2(s.pixel.point.gamma)},
                      {"t", vec2(s.pixel.frame.t)},
                      {"kappa", s.pixel.frame.kappa},
                      {"kappa_dot", s.pixel.frame.kappadot},
                      {"g", s.pixel.frame.g},
                      {"g_prime", s.pixel.g_prime},
                      {"depth", *s.pixel.point.rho},
                      {"world",
                       {{"point", vec3(s.world.point)},
                        {"T", vec3(w.T)},
                        {"N", vec3(w.N)},
                        {"B", vec3(w.B)},
                        {"K", w.K},
                        {"Kdot", w.Kdot},
                        {"tau", w.tau}}}},
                     false) +
                "\n";
      }
      write_text(root / "views" / (std::to_string(k) + ".jsonl"), view);
      total_rendered += static_cast<int>(r.samples.size());
      total_drops += r.dropped_behind + r.dropped_outside + r.dropped_degenerate;
      frames.push_back({{"frame", k},
                        {"time", scene.orbit.frame_time(k)},
                        {"R", mat3(pose.R)},
                        {"c", vec3(pose.c)},
                        {"t", vec3(pose.t)},
                        {"rendered", static_cast<int>(r.samples.size())},
                        {"dropped",
                         {{"behind", r.dropped_behind},
                          {"outside", r.dropped_outside},
                          {"degenerate", r.dropped_degenerate}}}});
    }
    const json sj = scene_to_json(scene);
    write_text(root / "cameras.json",
               dump({{"frames", frames}, {"intrinsics", sj.at("intrinsics")}}));
    write_text(root / "scene.json", dump(sj));
    out << "generated " << samples.size() << " samples on " << scene.curves.size() << " curves, "
        << poses.size() << " views, " << total_rendered << " rendered, " << total_drops << " dropped\n";
    return kExitPass;
  });
}

// ---- verify ---------------------------------------------------------------

int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Profile prof = profile(opt.tol);
    const Dataset d = load_dataset(opt.dataset);
    const int nframes = static_cast<int>(d.poses.size());
    if (opt.views.size() != 2 && opt.views.size() != 3) throw UsageError("--views takes two or three frames");
    for (int v : opt.views)
      if (v < 0 || v >= nframes) throw UsageError("view " + std::to_string(v) + " not in dataset");
    if (opt.views[0] == opt.views[1]) throw UsageError("the two reconstruction views must differ");

    std::vector<std::map<Key, ImageCurveSample>> views;
    for (int v : opt.views) views.push_back(load_view(opt.dataset, v));
    const Intrinsics& K = d.scene.orbit.K;

    StatTable projection(prof.tol), recon(prof.tol), transfer(prof.tol), residual(prof.tol);
    std::map<std::string, int> skipped;

    // projection against the exactly projected parametric curve
    for (std::size_t i = 0; i < views.size(); ++i) {
      const CameraPose& pose = d.poses[opt.views[i]];
      for (const auto& [key, rec] : views[i]) {
        const LabeledSample& ls = d.truth.at(key);
        const Frenet2 exact = oracle::projected_frame(curve_by_id(d.scene, key.first), pose, ls.s);
        const ImageCurveSample n = from_pixel_sample(rec, K);
        const std::string id = std::to_string(opt.views[i]) + "/" + key_name(key);
        projection["t"].add(id, (n.frame.t - exact.t).norm(), rel(n.frame.t, exact.t));
        projection["kappa"].add(id, n.frame.kappa, exact.kappa, true);
        projection["kappa_dot"].add(id, n.frame.kappadot, exact.kappadot, true);
      }
    }

    // two-view reconstruction
    const CameraPose& p1 = d.poses[opt.views[0]];
    const CameraPose& p2 = d.poses[opt.views[1]];
    Stat& tau_planar = recon["tau_planar"];
    Stat& tau_helix = recon["tau_helix"];
    for (const auto& [key, rec1] : views[0]) {
      const auto it2 = views[1].find(key);
      if (it2 == views[1].end()) continue;
      const LabeledSample& ls = d.truth.at(key);
      const Frenet3& truth = ls.sample.frame;
      const std::string id = key_name(key);
      const ViewMeasurement m1 = lift_measurement(from_pixel_sample(rec1, K), p1);
      const ViewMeasurement m2 = lift_measurement(from_pixel_sample(it2->second, K), p2);
      ReconstructedPoint rp;
      try {
        rp = reconstruct_point(m1, m2);
      } catch (const GeometryError& e) {
        ++skipped[to_string(e.code())];
        continue;
      }
      recon["point"].add(id, (rp.point - ls.sample.point).norm(), rel(rp.point, ls.sample.point));
      recon["T"].add(id, (rp.frame.T - truth.T).norm(), rel(rp.frame.T, truth.T));
      recon["K"].add(id, rp.frame.K, truth.K, true);
      const AnalyticCurve& c = curve_by_id(d.scene, key.first);
      if (!truth.has_normal) {
        ++skipped["ZeroCurvature"];
        if (rp.frame.has_normal) recon["N"].add(id, 1.0, 1.0);
        if (is_planar(c.family)) tau_planar.add(id, std::abs(rp.frame.tau), std::abs(rp.frame.tau));
        continue;
      }
      if (!rp.frame.has_normal) {
        recon["N"].add(id, 1.0, 1.0);
        continue;
      }
      recon["N"].add(id, (rp.frame.N - truth.N).norm(), rel(rp.frame.N, truth.N));
      recon["tau"].add(id, rp.frame.tau, truth.tau, true);
      recon["Kdot"].add(id, rp.frame.Kdot, truth.Kdot, true);
      if (is_planar(c.family)) tau_planar.add(id, std::abs(rp.frame.tau), std::abs(rp.frame.tau));
      if (c.family == CurveFamily::Helix) tau_helix.add(id, rp.frame.tau, c.b / (c.a * c.a + c.b * c.b), true);
    }

    // third-view transfer
    if (opt.views.size() == 3) {
      const CameraPose& p3 = d.poses[opt.views[2]];
      for (const auto& [key, rec1] : views[0]) {
        const auto it2 = views[1].find(key);
        const auto it3 = views[2].find(key);
        if (it2 == views[1].end() || it3 == views[2].end()) continue;
        const std::string id = key_name(key);
        TransferResult tr;
        try {
          tr = transfer_to_view(lift_measurement(from_pixel_sample(rec1, K), p1),
                                lift_measurement(from_pixel_sample(it2->second, K), p2), p3);
        } catch (const GeometryError& e) {
          ++skipped[std::string("transfer:") + to_string(e.code())];
          continue;
        }
        const ImageCurveSample want = from_pixel_sample(it3->second, K);
        transfer["gamma"].add(id, (tr.sample.point.gamma - want.point.gamma).norm(),
                              rel(tr.sample.point.gamma, want.point.gamma));
        transfer["t"].add(id, (tr.sample.frame.t - want.frame.t).norm(), rel(tr.sample.frame.t, want.frame.t));
        transfer["kappa"].add(id, tr.sample.frame.kappa, want.frame.kappa, true);
        transfer["kappa_dot"].add(id, tr.sample.frame.kappadot, want.frame.kappadot, true);
      }
    }

    // flow relations at the first view, exact orbit motion
    const double time = d.times[opt.views[0]];
    for (const auto& [key, rec] : views[0]) {
      (void)rec;
      const LabeledSample& ls = d.truth.at(key);
      const FlowPoint p = flow_point(curve_jet<double>(curve_by_id(d.scene, key.first), ls.s), d.scene.orbit, time);
      const Vec3 flow = fixed_point_flow(p.state.gamma, p.state.rho, p.m);
      const double epi = differential_epipolar_residual(p.state.gamma, flow, p.m);
      residual["differential_epipolar"].add(key_name(key), std::abs(epi), std::abs(epi));
      const double l1 = l1_residual(l1_input(p, rigid_beta_t(d.scene.orbit, time, p)), p.m).normalized;
      residual["l1_rigid"].add(key_name(key), std::abs(l1), std::abs(l1));
    }

    int total_skipped = 0;
    json skips = json::object();
    for (const auto& [k, v] : skipped) {
      skips[k] = v;
      total_skipped += v;
    }
    json drops = json::object();
    for (int v : opt.views) drops[std::to_string(v)] = d.drops[v];

    const bool pass = projection.pass() && recon.pass() && transfer.pass() && residual.pass() &&
                      !(opt.strict_degenerate && total_skipped > 0);
    json series = json::object();
    projection.series_into(series["projection"]);
    recon.series_into(series["reconstruction"]);
    transfer.series_into(series["transfer"]);
    residual.series_into(series["residuals"]);
    json report = {{"command", "verify"},
                   {"profile", prof.name},
                   {"tolerance", prof.tol},
                   {"views", opt.views},
                   {"strict_degenerate", opt.strict_degenerate},
                   {"projection", projection.to_json()},
                   {"reconstruction", recon.to_json()},
                   {"transfer", transfer.to_json()},
                   {"residuals", residual.to_json()},
                   {"skipped", skips},
                   {"skipped_total", total_skipped},
                   {"drops", drops},
                   {"series", series},
                   {"pass", pass}};
    const std::string path = opt.report ? *opt.report : (fs::path(opt.dataset) / "report.json").string();
    write_text(path, dump(report));

    print_table(out, "projection", projection);
    print_table(out, "reconstruction", recon);
    if (opt.views.size() == 3) print_table(out, "transfer", transfer);
    print_table(out, "residuals", residual);
    out << "skipped " << total_skipped;
    for (const auto& [k, v] : skipped) out << "  " << k << "=" << v;
    out << "\n" << (pass ? "PASS" : "FAIL") << "  report " << path << "\n";
    return pass ? kExitPass : kExitFail;
  });
}

// ---- flow -----------------------------------------------------------------

namespace {

constexpr double kMatchStep = 1e-3;
constexpr double kTransversal = 0.2;  // |T . epipolar plane normal| for the velocity comparison

struct Convergence {
  std::vector<double> h;
  std::vector<double> max_error;
  double tol = kFdTolerance;

  void add(std::size_t i, double e) {
    if (!std::isfinite(e)) e = INFINITY;
    max_error[i] = std::max(max_error[i], e);
  }
  double order() const { return oracle::fit_order(h, max_error); }
  bool pass() const {
    const double o = order();
    return std::isfinite(o) && std::abs(o - kOrderTarget) <= kOrderSlack && max_error.back() <= tol;
  }
  json to_json() const {
    return {{"h", h},
            {"max_error", max_error},
            {"order", order()},
            {"order_target", kOrderTarget},
            {"order_slack", kOrderSlack},
            {"tolerance", tol},
            {"pass", pass()}};
  }
};

}  // namespace

int cmd_flow(const FlowOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Profile prof = profile(opt.tol);
    const Dataset d = load_dataset(opt.dataset);
    const int nframes = static_cast<int>(d.poses.size());
    if (nframes < 3) throw UsageError("flow needs a dataset with at least 3 frames (centered differences)");
    if (opt.frame < 0 || opt.frame >= nframes) throw UsageError("frame " + std::to_string(opt.frame) + " not in dataset");
    if (opt.generator_points < 1) throw UsageError("generator point count must be positive");
    const Orbit& orbit = d.scene.orbit;
    const double time = d.times[opt.frame];
    const std::vector<double> hs{1e-2, 1e-3, 1e-4};
    const double fd_tol = std::max(prof.tol, kFdTolerance);
    auto make_conv = [&] {
      Convergence c;
      c.h = hs;
      c.max_error.assign(hs.size(), 0.0);
      c.tol = fd_tol;
      return c;
    };
    std::map<std::string, Convergence> conv;
    for (const char* k : {"fixed_point_flow", "image_acceleration", "alpha", "beta", "occluding_flow",
                          "occluding_gamma_tt"})
      conv[k] = make_conv();
    StatTable residual(prof.tol);
    residual["l1_rigid"].tol = std::min(prof.tol, 1e-6);
    std::map<std::string, int> skipped;

    // rigid curves: samples visible in this frame
    const std::map<Key, ImageCurveSample> view = load_view(opt.dataset, opt.frame);
    const oracle::OrbitView oview{orbit, time};
    for (const auto& [key, rec] : view) {
      (void)rec;
      const LabeledSample& ls = d.truth.at(key);
      const std::string id = key_name(key);
      const FlowPoint p = flow_point(curve_jet<double>(curve_by_id(d.scene, key.first), ls.s), orbit, time);
      const Vec3 gt = fixed_point_flow(p.state.gamma, p.state.rho, p.m);
      const Vec3 gtt = image_acceleration(p.state, p.m).gamma_tt;
      const NormalTangentialVelocity ab = curve_velocity_frenet(p.state, p.t, p.m);
      if (gt.norm() < 1e-12) {
        ++skipped["StationaryImagePoint"];
        continue;
      }
      const oracle::V3 G = oracle::up(p.world);
      for (std::size_t i = 0; i < hs.size(); ++i) {
        auto g = [&](oracle::Real s) { return oview.gamma(G, s); };
        const Vec3 d1 = oracle::first_difference(g, hs[i]).cast<double>();
        const Vec3 d2 = oracle::second_difference(g, hs[i]).cast<double>();
        conv["fixed_point_flow"].add(i, (d1 - gt).norm());
        conv["image_acceleration"].add(i, (d2 - gtt).norm());
        conv["alpha"].add(i, std::abs(d1.dot(p.t) - ab.alpha));
        conv["beta"].add(i, std::abs(d1.dot(perp(p.t)) - ab.beta));
      }
      const double epi = differential_epipolar_residual(p.state.gamma, gt, p.m);
      residual["differential_epipolar"].add(id, std::abs(epi), std::abs(epi));
      if (p.m.V.norm() > 0) {
        const double fe = frenet_epipolar_residual(ab.alpha, ab.beta, p.state.gamma, p.t, p.m);
        residual["frenet_epipolar"].add(id, std::abs(fe), std::abs(fe));
      }
      const double l1 = l1_residual(l1_input(p, rigid_beta_t(orbit, time, p)), p.m).normalized;
      residual["l1_rigid"].add(id, std::abs(l1), std::abs(l1));
    }

    // occluding contours of the quadrics
    const OrbitState<double> st = orbit_state(orbit, time);
    json matching = json::object();
    for (const Quadric& q : d.scene.quadrics) {
      const std::string qid = "q" + std::to_string(q.id);
      for (int k = 0; k < opt.generator_points; ++k) {
        const double phi = 2.0 * std::numbers::pi * (k + 0.25) / opt.generator_points;
        const std::string id = qid + ":" + std::to_string(k);
        FlowPoint p = flow_point(generator_jet<double>(q, st.c, phi), orbit, time);
        const double Kt = occluding_normal_curvature(q, p.world, st.c, p.Tw);
        const Vec3 Gw_t = contour_generator_velocity(p.state.gamma, p.state.rho, p.m.V, p.t, Kt);
        p.state = CurveMotionState::occluding(p.state.gamma, p.state.rho, Gw_t, Kt);
        const ImageVelocity v = image_velocity(p.state, p.m);
        const Vec3 flow = occluding_flow(p.state.gamma, p.state.rho, p.m);
        const Vec3 acc = occluding_gamma_tt(p.state, p.m, flow, v.rho_t);
        const double cancel = (v.gamma_t - flow).norm();
        residual["occluding_cancellation"].add(id, cancel, cancel);

        oracle::OccludingTrackT<Quad> track;
        track.quadric = q;
        track.view = {orbit, Quad(time)};
        track.start = p.world.cast<Quad>();
        track.tangent0 = p.Tw.cast<Quad>();
        const Vec3T<Quad> g0 = track.gamma(Quad(0));
        for (std::size_t i = 0; i < hs.size(); ++i) {
          const Quad H(hs[i]);
          const Vec3T<Quad> gp = track.gamma(H), gm = track.gamma(-H);
          const Vec3 d1 = Vec3T<Quad>((gp - gm) / (Quad(2) * H)).cast<double>();
          const Vec3 d2 = Vec3T<Quad>((gp - Quad(2) * g0 + gm) / (H * H)).cast<double>();
          conv["occluding_flow"].add(i, (d1 - flow).norm());
          conv["occluding_gamma_tt"].add(i, (d2 - acc).norm());
        }
        oracle::OccludingTrack ltrack;
        ltrack.quadric = q;
        ltrack.view = {orbit, time};
        ltrack.start = oracle::up(p.world);
        ltrack.tangent0 = oracle::up(p.Tw);
        const double bt = double(oracle::five_point_difference([&](oracle::Real s) { return ltrack.beta(s); }, 1e-3));
        const double l1 = l1_residual(l1_input(p, bt), p.m).normalized;
        residual["l1_occluding"].add(id, std::abs(l1), std::abs(l1));
      }

      // epipolar correspondence of the sampled generators at nearby times
      const double h = kMatchStep;
      const int n = d.scene.generator_samples;
      const GeneratorFrame now = generator_frame(q, orbit, time, n);
      const GeneratorFrame fa = generator_frame(q, orbit, time - h, n);
      const GeneratorFrame fb = generator_frame(q, orbit, time + h, n);
      json m = {{"samples", n}, {"spacing", h}};
      try {
        const std::vector<EpipolarMatch> matches = epipolar_correspond(q, now, fb, &fa);
        const CameraMotion cm = orbit_motion(orbit, time);
        double max_angle = 0, max_err = 0;
        int frontier = 0;
        for (const EpipolarMatch& em : matches) {
          max_angle = std::max(max_angle, em.angle);
          frontier += em.frontier;
          const GeneratorSample& gs = now.samples[em.index];
          const Vec3 cam = st.R * (gs.sample.point - st.c);
          const Vec3 gamma = cam / cam.z();
          const Vec3 t = project_tangent(st.R * gs.sample.frame.T, gamma).t;
          const Vec3 want = st.R.transpose() * contour_generator_velocity(gamma, cam.z(), cm.V, t, gs.Kt);
          const Vec3 plane_n = (gs.sample.point - now.c).cross(now.c_dot).normalized();
          if (std::abs(gs.sample.frame.T.dot(plane_n)) < kTransversal) continue;
          max_err = std::max(max_err, (em.velocity - want).norm());
        }
        m["matched"] = static_cast<int>(matches.size());
        m["frontier"] = frontier;
        m["max_angle"] = max_angle;
        m["max_velocity_error_transversal"] = max_err;
        m["pass"] = true;
      } catch (const GeometryError& e) {
        m["matched"] = 0;
        m["error"] = to_string(e.code());
        m["pass"] = false;
      }
      matching[qid] = m;
    }

    // centered differences across the dataset frames themselves
    json frame_fd = json::object();
    {
      const int prev = (opt.frame + nframes - 1) % nframes, next = (opt.frame + 1) % nframes;
      const auto va = load_view(opt.dataset, prev), vb = load_view(opt.dataset, next);
      const double h = d.times[1] - d.times[0];
      double max_err = 0;
      int used = 0;
      for (const auto& [key, rec] : view) {
        (void)rec;
        const auto a = va.find(key), b = vb.find(key);
        if (a == va.end() || b == vb.end()) continue;
        const LabeledSample& ls = d.truth.at(key);
        const FlowPoint p = flow_point(curve_jet<double>(curve_by_id(d.scene, key.first), ls.s), orbit, time);
        const Vec3 ga = from_pixel(a->second.point.gamma, d.scene.orbit.K).gamma;
        const Vec3 gb = from_pixel(b->second.point.gamma, d.scene.orbit.K).gamma;
        const Vec3 fd = (gb - ga) / (2 * h);
        max_err = std::max(max_err, (fd - fixed_point_flow(p.state.gamma, p.state.rho, p.m)).norm());
        ++used;
      }
      frame_fd = {{"frames", json::array({prev, opt.frame, next})}, {"spacing", h}, {"samples", used},
                  {"max_error", max_err}};
    }

    int total_skipped = 0;
    json skips = json::object();
    for (const auto& [k, v] : skipped) {
      skips[k] = v;
      total_skipped += v;
    }
    bool pass = residual.pass() && !(opt.strict_degenerate && total_skipped > 0);
    json cj = json::object();
    for (const auto& [k, c] : conv) {
      cj[k] = c.to_json();
      pass = pass && c.pass();
    }
    for (const auto& [k, m] : matching.items()) pass = pass && m.at("pass").get<bool>();
    json series = json::object();
    residual.series_into(series["residuals"]);
    json report = {{"command", "flow"},
                   {"profile", prof.name},
                   {"tolerance", prof.tol},
                   {"frame", opt.frame},
                   {"time", time},
                   {"convergence", cj},
                   {"residuals", residual.to_json()},
                   {"epipolar_matching", matching},
                   {"frame_centered_difference", frame_fd},
                   {"skipped", skips},
                   {"skipped_total", total_skipped},
                   {"series", series},
                   {"pass", pass}};
    const std::string path = opt.report ? *opt.report : (fs::path(opt.dataset) / "flow_report.json").string();
    write_text(path, dump(report));

    out << "convergence (h = 1e-2, 1e-3, 1e-4)\n";
    for (const auto& [k, c] : conv)
      out << "  " << std::left << std::setw(24) << k << std::right << "order " << std::fixed << std::setprecision(3)
          << c.order() << "  finest " << std::scientific << c.max_error.back() << "  " << (c.pass() ? "PASS" : "FAIL")
          << "\n";
    out << std::defaultfloat;
    print_table(out, "residuals", residual);
    out << (pass ? "PASS" : "FAIL") << "  report " << path << "\n";
    return pass ? kExitPass : kExitFail;
  });
}

// ---- plot -----------------------------------------------------------------

namespace {

struct Series {
  std::string name;
  std::vector<double> x, y;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string svg_plot(const std::string& title, const std::string& xlabel, const std::vector<Series>& series,
                     bool log_x) {
  const double W = 720, H = 440, L = 70, R = 180, T = 40, B = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  auto tx = [&](double x) { return log_x ? std::log10(x) : x; };
  auto usable = [&](double x, double y) { return std::isfinite(y) && y > 0 && (!log_x || x > 0); };
  for (const Series& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, std::log10(s.y[i]));
      y1 = std::max(y1, std::log10(s.y[i]));
    }
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(W) + "\" height=\"" + fmt(H) +
                    "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + fmt(W) + "\" height=\"" + fmt(H) + "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt(L) + "\" y=\"24\" font-size=\"15\">" + title + "</text>\n";
  svg += "<rect x=\"" + fmt(L) + "\" y=\"" + fmt(T) + "\" width=\"" + fmt(W - L - R) + "\" height=\"" +
         fmt(H - T - B) + "\" fill=\"none\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + fmt(L + (W - L - R) / 2) + "\" y=\"" + fmt(H - 12) + "\" text-anchor=\"middle\">" + xlabel +
         "</text>\n";
  if (!std::isfinite(x0)) {
    svg += "<text x=\"" + fmt(L + 20) + "\" y=\"" + fmt(T + 30) + "\">no data</text>\n</svg>\n";
    return svg;
  }
  if (x1 == x0) x1 = x0 + 1;
  y0 = std::floor(y0);
  y1 = std::ceil(y1);
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (std::log10(y) - y0) / (y1 - y0) * (H - T - B); };
  for (int e = static_cast<int>(y0); e <= static_cast<int>(y1); ++e) {
    const double y = H - B - (e - y0) / (y1 - y0) * (H - T - B);
    svg += "<line x1=\"" + fmt(L) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(W - R) + "\" y2=\"" + fmt(y) +
           "\" stroke=\"#ddd\"/>\n";
    svg += "<text x=\"" + fmt(L - 6) + "\" y=\"" + fmt(y + 4) + "\" text-anchor=\"end\">1e" + std::to_string(e) +
           "</text>\n";
  }
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                 "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* col = colors[k % 10];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      pts += fmt(px(s.x[i])) + "," + fmt(py(s.y[i])) + " ";
    }
    if (!pts.empty())
      svg += "<polyline fill=\"none\" stroke=\"" + std::string(col) + "\" stroke-width=\"1.2\" points=\"" + pts +
             "\"/>\n";
    const double ly = T + 14 + 16 * static_cast<double>(k);
    svg += "<line x1=\"" + fmt(W - R + 10) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" + fmt(W - R + 28) + "\" y2=\"" +
           fmt(ly - 4) + "\" stroke=\"" + col + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt(W - R + 32) + "\" y=\"" + fmt(ly) + "\">" + s.name + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace

int cmd_plot(const PlotOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const json report = read_json(opt.report);
    if (!report.is_object()) throw UsageError("report must be a JSON object");
    const fs::path dir = opt.out ? fs::path(*opt.out) : fs::path(opt.report).parent_path() / "plots";
    fs::create_directories(dir);

    std::string csv = "group,quantity,index,sample,error\n";
    std::vector<Series> per_sample;
    if (report.contains("series")) {
      for (const auto& [group, quantities] : report.at("series").items()) {
        if (!quantities.is_object()) continue;
        for (const auto& [name, rows] : quantities.items()) {
          Series s{group + "/" + name, {}, {}};
          int i = 0;
          for (const json& r : rows) {
            const double e = r.at(1).is_number() ? r.at(1).get<double>() : INFINITY;
            csv += group + "," + name + "," + std::to_string(i) + "," + r.at(0).get<std::string>() + "," +
                   number(e) + "\n";
            s.x.push_back(i++);
            s.y.push_back(e);
          }
          per_sample.push_back(s);
        }
      }
    }
    write_text(dir / "errors.csv", csv);
    write_text(dir / "errors.svg", svg_plot("relative error per sample (log scale)", "sample index", per_sample, false));

    std::string ccsv = "quantity,h,max_error\n";
    std::vector<Series> curves;
    if (report.contains("convergence")) {
      for (const auto& [name, c] : report.at("convergence").items()) {
        Series s{name, {}, {}};
        const json& h = c.at("h");
        const json& e = c.at("max_error");
        for (std::size_t i = 0; i < h.size() && i < e.size(); ++i) {
          const double hv = h[i].get<double>();
          const double ev = e[i].is_number() ? e[i].get<double>() : INFINITY;
          ccsv += name + "," + number(hv) + "," + number(ev) + "\n";
          s.x.push_back(hv);
          s.y.push_back(ev);
        }
        curves.push_back(s);
      }
    }
    write_text(dir / "convergence.csv", ccsv);
    write_text(dir / "convergence.svg", svg_plot("finite-difference error vs step", "step h (log scale)", curves, true));
    out << "wrote " << (dir / "errors.csv").string() << ", errors.svg, convergence.csv, convergence.svg\n";
    return kExitPass;
  });
}

}  // namespace mvg::cli
