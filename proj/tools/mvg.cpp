#include "mvg/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace mvg::cli;

int main(int argc, char** argv) {
  CLI::App app{"Multiview differential geometry of curves: synthetic data and checks"};
  app.require_subcommand(1);

  GenerateOptions gen;
  std::string gen_scene;
  int gen_frames = 0;
  auto* g = app.add_subcommand("generate", "Sample the scene and render every orbit view");
  g->add_option("--scene", gen_scene, "Scene config (JSON); default scene if omitted")->check(CLI::ExistingFile);
  g->add_option("--out", gen.out, "Output dataset directory")->required();
  g->add_option("--frames", gen_frames, "Override the number of orbit frames");

  VerifyOptions ver;
  std::string ver_views, ver_report;
  auto* v = app.add_subcommand("verify", "Projection, reconstruction and transfer checks against ground truth");
  v->add_option("dataset", ver.dataset, "Dataset directory")->required();
  v->add_option("--views", ver_views, "Two or three frame indices, e.g. 0,10 or 0,10,20")->required();
  v->add_option("--tol", ver.tol, "Tolerance profile: strict, default, fd");
  v->add_flag("--strict-degenerate", ver.strict_degenerate, "Fail when any sample is skipped as degenerate");
  v->add_option("--report", ver_report, "Report path (default <dataset>/report.json)");

  FlowOptions flow;
  std::string flow_report;
  auto* f = app.add_subcommand("flow", "Image flow, acceleration and residual checks at one frame");
  f->add_option("dataset", flow.dataset, "Dataset directory")->required();
  f->add_option("--frame", flow.frame, "Frame index");
  f->add_option("--tol", flow.tol, "Tolerance profile: strict, default, fd");
  f->add_flag("--strict-degenerate", flow.strict_degenerate, "Fail when any sample is skipped as degenerate");
  f->add_option("--report", flow_report, "Report path (default <dataset>/flow_report.json)");
  f->add_option("--generator-points", flow.generator_points, "Contour points per quadric");

  PlotOptions plot;
  std::string plot_out;
  auto* p = app.add_subcommand("plot", "Error and convergence plots (CSV and SVG) from a report");
  p->add_option("report", plot.report, "Report JSON")->required();
  p->add_option("--out", plot_out, "Output directory (default <report dir>/plots)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (g->parsed()) {
    if (!gen_scene.empty()) gen.scene = gen_scene;
    if (g->count("--frames")) gen.frames = gen_frames;
    return cmd_generate(gen, std::cout, std::cerr);
  }
  if (v->parsed()) {
    try {
      ver.views = parse_views(ver_views);
    } catch (const UsageError& e) {
      std::cerr << "mvg: " << e.what() << "\n";
      return kExitUsage;
    }
    if (!ver_report.empty()) ver.report = ver_report;
    return cmd_verify(ver, std::cout, std::cerr);
  }
  if (f->parsed()) {
    if (!flow_report.empty()) flow.report = flow_report;
    return cmd_flow(flow, std::cout, std::cerr);
  }
  if (!plot_out.empty()) plot.out = plot_out;
  return cmd_plot(plot, std::cout, std::cerr);
}
