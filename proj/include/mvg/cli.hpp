#pragma once

#include "mvg/dataset.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Command implementations behind the `mvg` tool. Each returns the process exit
// code: 0 pass, 1 tolerance failure, 2 usage or I/O error.

namespace mvg::cli {

using json = nlohmann::json;

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Profile {
  std::string name;
  double tol;
};

// strict 1e-8, default 1e-6, fd 1e-3
Profile profile(const std::string& name);
inline constexpr double kFdTolerance = 1e-3;
inline constexpr double kOrderTarget = 2.0;
inline constexpr double kOrderSlack = 0.2;

json scene_to_json(const Scene& s);
// Missing keys keep the default scene's values.
Scene scene_from_json(const json& j);

// Sorted keys, integers verbatim, reals as %.17g, non-finite as null.
std::string dump(const json& j, bool pretty = true);
json read_json(const std::string& path);
std::vector<json> read_jsonl(const std::string& path);

struct GenerateOptions {
  std::optional<std::string> scene;
  std::string out;
  std::optional<int> frames;
};

struct VerifyOptions {
  std::string dataset;
  std::vector<int> views;
  std::string tol = "default";
  bool strict_degenerate = false;
  std::optional<std::string> report;  // defaults to <dataset>/report.json
};

struct FlowOptions {
  std::string dataset;
  int frame = 0;
  std::string tol = "fd";
  bool strict_degenerate = false;
  std::optional<std::string> report;  // defaults to <dataset>/flow_report.json
  int generator_points = 8;
};

struct PlotOptions {
  std::string report;
  std::optional<std::string> out;  // defaults to <report dir>/plots
};

int cmd_generate(const GenerateOptions& opt, std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err);
int cmd_flow(const FlowOptions& opt, std::ostream& out, std::ostream& err);
int cmd_plot(const PlotOptions& opt, std::ostream& out, std::ostream& err);

// A rigid curve point seen from the orbit at `time`, in that camera's frame.
struct FlowPoint {
  CurveMotionState state;
  CameraMotion m;
  Vec3 t, gamma_s;
  double rho_s = 0.0;
  Vec3 world, Tw;
};

FlowPoint flow_point(const CurveJet<double>& j, const Orbit& o, double time);
L1Input l1_input(const FlowPoint& p, double beta_t);
// five-point difference of the exact image normal velocity
double rigid_beta_t(const Orbit& o, double time, const FlowPoint& p);

// "0,10" or "0,5,12"
std::vector<int> parse_views(const std::string& s);

}  // namespace mvg::cli
