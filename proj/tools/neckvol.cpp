// neckvol: command-line front end for the neck measurement pipeline.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "neckvol/neckvol.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace neckvol;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitFailure = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void print_error(const std::string& code, const std::string& message, int exit_code) {
  const json j{{"schema_version", kSchemaVersion}, {"error", code}, {"message", message}, {"exit_code", exit_code}};
  std::cerr << j.dump() << '\n';
}

// Config flags shared by every subcommand; unset ones leave the config alone.
struct Overrides {
  std::optional<std::string> config_path;
  std::optional<int> window, knn, max_shift, smoothing_window;
  std::optional<double> mad_k, sigmas, denoise_sigmas, near_mm, far_mm, gap_mm, plane_fraction, dy_mm, prominence,
      end_threshold, mm_per_pixel;
  std::optional<bool> quantize, interpolate_edges;
  bool deterministic = false;
  std::string session_id;
};

void add_config_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "pipeline config JSON");
  app->add_option("--window", o.window, "MAD window (odd)");
  app->add_option("--mad-k", o.mad_k, "MAD scale constant");
  app->add_option("--sigmas", o.sigmas, "outlier threshold in scaled MADs");
  app->add_option("--knn", o.knn, "neighbors for cloud denoising");
  app->add_option("--denoise-sigmas", o.denoise_sigmas, "denoise threshold in std devs");
  app->add_option("--near-mm", o.near_mm, "near depth cut");
  app->add_option("--far-mm", o.far_mm, "far depth cut");
  app->add_option("--max-shift", o.max_shift, "back/front alignment search radius, px");
  app->add_option("--gap-mm", o.gap_mm, "front/back gap");
  app->add_option("--plane-fraction", o.plane_fraction, "deepest fraction defining the silhouette plane");
  app->add_option("--dy-mm", o.dy_mm, "slice height");
  app->add_option("--prominence", o.prominence, "neck bounds prominence fraction");
  app->add_option("--smoothing-window", o.smoothing_window, "circumference smoothing window (odd)");
  app->add_option("--end-threshold", o.end_threshold, "neck end threshold");
  app->add_option("--interpolate-edges", o.interpolate_edges, "sub-pixel edge interpolation (true/false)");
  app->add_option("--quantize", o.quantize, "round filtered frames to whole mm (true/false)");
  app->add_option("--mm-per-pixel", o.mm_per_pixel, "lateral scale");
  app->add_flag("--deterministic", o.deterministic, "omit the timestamp from reports");
  app->add_option("--session-id", o.session_id, "session label stored in reports");
}

struct ResolvedConfig {
  PipelineConfig cfg;
  bool gap_explicit = false;
};

ResolvedConfig resolve(const Overrides& o) {
  ResolvedConfig r;
  if (o.config_path) {
    r.cfg = load_config(*o.config_path);
    std::ifstream in(*o.config_path);
    r.gap_explicit = json::parse(in).contains("gap_mm");
  }
  auto& c = r.cfg;
  if (o.window) c.window = *o.window;
  if (o.mad_k) c.mad_k = *o.mad_k;
  if (o.sigmas) c.sigmas = *o.sigmas;
  if (o.knn) c.knn = *o.knn;
  if (o.denoise_sigmas) c.denoise_sigmas = *o.denoise_sigmas;
  if (o.near_mm) c.near_mm = *o.near_mm;
  if (o.far_mm) c.far_mm = *o.far_mm;
  if (o.max_shift) c.max_shift_px = *o.max_shift;
  if (o.gap_mm) {
    c.gap_mm = *o.gap_mm;
    r.gap_explicit = true;
  }
  if (o.plane_fraction) c.plane_fraction = *o.plane_fraction;
  if (o.dy_mm) c.dy_mm = *o.dy_mm;
  if (o.prominence) c.prominence_fraction = *o.prominence;
  if (o.smoothing_window) c.smoothing_window = *o.smoothing_window;
  if (o.end_threshold) c.end_threshold = *o.end_threshold;
  if (o.interpolate_edges) c.interpolate_edges = *o.interpolate_edges;
  if (o.quantize) c.quantize_mm = *o.quantize;
  if (o.mm_per_pixel) c.mm_per_pixel = *o.mm_per_pixel;
  c.validate();
  return r;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::unwritable_path, path.string());
  out << text;
  if (!out) throw Error(Errc::unwritable_path, path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::unreadable_path, path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::malformed_file, path.string() + ": " + e.what());
  }
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

PixelRect parse_rect(const std::string& text) {
  std::vector<long> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long x = std::stol(item, &used);
      if (used != item.size() || x < 0) throw UsageError("bad rectangle '" + text + "'");
      v.push_back(x);
    } catch (const std::logic_error&) {
      throw UsageError("bad rectangle '" + text + "'");
    }
  }
  if (v.size() != 4) throw UsageError("rectangle needs r,c,h,w: '" + text + "'");
  return {static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]), static_cast<std::size_t>(v[2]),
          static_cast<std::size_t>(v[3])};
}

DepthFrame load_frame(const fs::path& path, const Overrides& o) { return read_frame(path, o.mm_per_pixel); }

// Every *.pgm in a directory, by file name.
std::vector<DepthFrame> load_frame_dir(const fs::path& dir, const Overrides& o) {
  if (!fs::is_directory(dir)) throw Error(Errc::unreadable_path, dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(Errc::empty_input, dir.string() + " holds no .pgm frames");
  std::vector<DepthFrame> frames;
  for (const auto& f : files) frames.push_back(load_frame(f, o));
  return frames;
}

json match_json(const MatchResult& m) {
  return {{"schema_version", kSchemaVersion}, {"row", m.row}, {"col", m.col}, {"score", m.score}};
}

MeasurementReport finish_report(MeasurementReport rep, const Overrides& o) {
  if (!o.deterministic) rep.timestamp = utc_timestamp();
  rep.session_id = o.session_id;
  return rep;
}

void write_profile_csv(const fs::path& path, const AreaProfile& p) {
  std::string s = "y_mm,area_dm2\n";
  for (std::size_t i = 0; i < p.size(); ++i) s += fmt(p.slice_centers[i]) + "," + fmt(p.areas[i]) + "\n";
  write_text(path, s);
}

void emit_report(const MeasurementReport& rep, const std::optional<std::string>& out,
                 const std::optional<std::string>& csv) {
  const auto j = report_json(rep);
  if (out) {
    write_json(*out, j);
  } else {
    std::cout << j.dump(2) << '\n';
  }
  if (csv) write_profile_csv(*csv, rep.profile);
}

// ---- subcommands ----

struct PhantomArgs {
  std::string spec;
  std::string view = "front";
  std::size_t frames = 10;
  std::uint64_t first_index = 0;
  std::optional<std::string> out;
  bool ground_truth = false;
};

int run_phantom(const PhantomArgs& a, const Overrides& o) {
  if (!a.out && !a.ground_truth) throw UsageError("phantom needs --out and/or --ground-truth");
  const auto rc = resolve(o);
  const auto spec = load_phantom_spec(a.spec);
  const auto render_cfg = default_render_config(spec, rc.cfg.mm_per_pixel);
  if (a.out) {
    if (a.frames == 0) throw UsageError("--frames must be >= 1");
    const View view = parse_view(a.view) == ViewTag::back ? View::back : View::front;
    if (parse_view(a.view) == ViewTag::merged) throw UsageError("--view is front or back");
    fs::create_directories(*a.out);
    const FrameMeta meta{render_cfg.mm_per_pixel, spec.pose_distance_m, a.view};
    for (std::size_t i = 0; i < a.frames; ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "%s_%03zu.pgm", a.view.c_str(), i);
      write_frame(render(spec, view, render_cfg, a.first_index + i), fs::path(*a.out) / name, meta);
    }
  }
  if (a.ground_truth) {
    PhantomSpec plain = spec;
    plain.bump.reset();
    const double neck = analytic_neck_volume(spec);
    const json j{{"schema_version", kSchemaVersion},
                 {"neck_volume_liters", neck},
                 {"bump_volume_liters", neck - analytic_neck_volume(plain)},
                 {"calibrated_gap_mm", calibrate_phantom_gap(spec, render_cfg, rc.cfg)},
                 {"render",
                  {{"width", render_cfg.width},
                   {"height", render_cfg.height},
                   {"mm_per_pixel", render_cfg.mm_per_pixel},
                   {"neck_top_row", render_cfg.neck_top_row}}}};
    std::cout << j.dump(2) << '\n';
  }
  return kExitOk;
}

struct FilterArgs {
  std::vector<std::string> inputs;
  std::optional<std::string> input_dir;
  std::string out;
};

int run_filter(const FilterArgs& a, const Overrides& o) {
  if (a.inputs.empty() == !a.input_dir) throw UsageError("filter needs exactly one of --input or --input-dir");
  const auto cfg = resolve(o).cfg;
  std::vector<DepthFrame> frames;
  if (a.input_dir) {
    frames = load_frame_dir(*a.input_dir, o);
  } else {
    for (const auto& p : a.inputs) frames.push_back(load_frame(p, o));
  }
  const auto res = preprocess_view(frames, cfg);
  std::string view = "front";
  const fs::path first = a.input_dir ? fs::path() : fs::path(a.inputs.front());
  if (!first.empty()) {
    if (auto m = read_meta(first)) view = m->view;
  }
  write_frame(res.frame, a.out, FrameMeta{res.frame.mm_per_pixel(), 1.0, view});
  const json j{{"schema_version", kSchemaVersion},
               {"frames", frames.size()},
               {"replaced", res.replaced},
               {"unrepaired_columns", res.unrepaired_columns}};
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

struct LocateArgs {
  std::string reference, input, rect;
  std::optional<std::string> out;
};

int run_locate(const LocateArgs& a, const Overrides& o) {
  const auto rect = parse_rect(a.rect);
  resolve(o);
  const auto tmpl = make_template(load_frame(a.reference, o), rect);
  const auto m = ncc_match(load_frame(a.input, o), tmpl);
  const auto j = match_json(m);
  if (a.out) {
    write_json(*a.out, j);
  } else {
    std::cout << j.dump(2) << '\n';
  }
  return kExitOk;
}

struct CircArgs {
  std::string input;
  std::optional<std::string> reference, template_rect, neck_rect, out, csv, smoothed_csv;
};

int run_circ(const CircArgs& a, const Overrides& o) {
  if (a.reference.has_value() != a.template_rect.has_value()) {
    throw UsageError("--reference and --template-rect go together");
  }
  if (a.reference && a.neck_rect) throw UsageError("use either --reference or --neck-rect");
  const auto cfg = resolve(o).cfg;
  const auto input = load_frame(a.input, o);
  DepthFrame neck = input;
  json j{{"schema_version", kSchemaVersion}};
  if (a.reference) {
    const auto tmpl = make_template(load_frame(*a.reference, o), parse_rect(*a.template_rect));
    const auto m = ncc_match(input, tmpl);
    j["match"] = match_json(m);
    neck = crop(input, m.row, m.col, tmpl.patch.height(), tmpl.patch.width());
  } else if (a.neck_rect) {
    neck = crop(input, parse_rect(*a.neck_rect));
  }
  const auto prof = measure_circumference(neck, cfg.circumference_options());
  j["rows"] = prof.rows;
  j["lengths_mm"] = prof.lengths;
  j["smoothed_lengths_mm"] = prof.smoothed_lengths;
  j["smoothing_window"] = prof.smoothing_window;
  j["neck_end_row"] = prof.neck_end_row ? json(*prof.neck_end_row) : json(nullptr);
  j["parameters"] = cfg;
  if (a.out) {
    write_json(*a.out, j);
  } else {
    std::cout << j.dump(2) << '\n';
  }
  auto csv = [&](const std::string& path, const std::vector<double>& v) {
    std::string s = "row,length_mm\n";
    for (std::size_t i = 0; i < v.size(); ++i) s += std::to_string(prof.rows[i]) + "," + fmt(v[i]) + "\n";
    write_text(path, s);
  };
  if (a.csv) csv(*a.csv, prof.lengths);
  if (a.smoothed_csv) csv(*a.smoothed_csv, prof.smoothed_lengths);
  return kExitOk;
}

struct MergeArgs {
  std::string front, back, out;
};

int run_merge(const MergeArgs& a, const Overrides& o) {
  const auto cfg = resolve(o).cfg;
  const auto rec = reconstruct(load_frame(a.front, o), load_frame(a.back, o), cfg);
  write_ply(rec.merged, a.out);
  const json j{{"schema_version", kSchemaVersion},
               {"points", rec.merged.size()},
               {"front_points", rec.front.size()},
               {"back_points", rec.back.size()},
               {"shift_row", rec.shift_row},
               {"shift_col", rec.shift_col},
               {"align_score", rec.align_score},
               {"gap_mm", cfg.gap_mm}};
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

struct VolumeArgs {
  std::string cloud;
  std::optional<std::string> out, csv;
};

int run_volume(const VolumeArgs& a, const Overrides& o) {
  auto rc = resolve(o);
  const auto cloud = read_ply(a.cloud);
  // The gap is a property of the merge; adopt it unless one was asked for.
  if (cloud.merge) {
    if (rc.gap_explicit && cloud.merge->gap_mm != rc.cfg.gap_mm) {
      throw Error(Errc::parameter_mismatch, "cloud was merged with gap_mm " + fmt(cloud.merge->gap_mm) +
                                                " but gap_mm " + fmt(rc.cfg.gap_mm) + " was requested");
    }
    rc.cfg.gap_mm = cloud.merge->gap_mm;
  }
  emit_report(finish_report(measure_volume(cloud, rc.cfg), o), a.out, a.csv);
  return kExitOk;
}

struct PipelineArgs {
  std::string front_dir, back_dir;
  std::optional<std::string> out, csv, cloud_out;
};

int run_pipeline_cmd(const PipelineArgs& a, const Overrides& o) {
  const auto cfg = resolve(o).cfg;
  const auto front = load_frame_dir(a.front_dir, o);
  const auto back = load_frame_dir(a.back_dir, o);
  const auto f = preprocess_view(front, cfg);
  const auto b = preprocess_view(back, cfg);
  const auto rec = reconstruct(f.frame, b.frame, cfg);
  if (a.cloud_out) write_ply(rec.merged, *a.cloud_out);
  emit_report(finish_report(measure_volume(rec.merged, cfg), o), a.out, a.csv);
  return kExitOk;
}

struct ExperimentArgs {
  std::string spec, bump_spec;
  std::size_t n = 10;
  std::uint64_t seed = 1;
  std::size_t frames = 10;
  bool no_calibrate = false;
  std::optional<std::string> out;
};

int run_experiment_cmd(const ExperimentArgs& a, const Overrides& o) {
  const auto cfg = resolve(o).cfg;
  ExperimentOptions opt;
  opt.master_seed = a.seed;
  opt.frames_per_capture = a.frames;
  opt.calibrate_gap = !a.no_calibrate;
  const auto res = run_experiment(load_phantom_spec(a.spec), load_phantom_spec(a.bump_spec), a.n, cfg, opt);
  auto j = experiment_json(res);
  j["n"] = a.n;
  j["master_seed"] = a.seed;
  j["frames_per_capture"] = a.frames;
  auto params = cfg;
  params.gap_mm = res.gap_mm;
  j["parameters"] = params;
  if (a.out) {
    write_json(*a.out, j);
  } else {
    std::cout << j.dump(2) << '\n';
  }
  return kExitOk;
}

struct CompareArgs {
  std::string reference, current;
  std::optional<std::string> out;
};

int run_compare(const CompareArgs& a) {
  const auto ref = report_from_json(read_json(a.reference));
  const auto cur = report_from_json(read_json(a.current));
  const auto j = session_delta_json(compare_sessions(ref, cur));
  if (a.out) {
    write_json(*a.out, j);
  } else {
    std::cout << j.dump(2) << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neck circumference and volume from depth frames"};
  app.require_subcommand(1);
  Overrides o;

  PhantomArgs pa;
  auto* phantom = app.add_subcommand("phantom", "render synthetic depth frames of a phantom");
  phantom->add_option("--spec", pa.spec, "phantom spec JSON")->required();
  phantom->add_option("--view", pa.view, "front or back")->check(CLI::IsMember({"front", "back"}));
  phantom->add_option("--frames", pa.frames, "number of frames");
  phantom->add_option("--first-index", pa.first_index, "noise stream index of the first frame");
  phantom->add_option("--out", pa.out, "output directory");
  phantom->add_flag("--ground-truth", pa.ground_truth, "print analytic volumes as JSON");

  FilterArgs fa;
  auto* filter = app.add_subcommand("filter", "average, repair and mask a frame stack");
  filter->add_option("--input", fa.inputs, "input frames");
  filter->add_option("--input-dir", fa.input_dir, "directory of input frames");
  filter->add_option("--out", fa.out, "filtered PGM")->required();

  LocateArgs la;
  auto* locate = app.add_subcommand("locate", "find a reference neck template in a frame");
  locate->add_option("--reference", la.reference, "reference frame")->required();
  locate->add_option("--template-rect", la.rect, "r,c,h,w of the template in the reference")->required();
  locate->add_option("--input", la.input, "frame to search")->required();
  locate->add_option("--out", la.out, "match JSON");

  CircArgs ca;
  auto* circ = app.add_subcommand("circ", "half-circumference profile of a front frame");
  circ->add_option("--input", ca.input, "filtered front frame")->required();
  circ->add_option("--reference", ca.reference, "reference frame for locating the neck");
  circ->add_option("--template-rect", ca.template_rect, "r,c,h,w of the neck in the reference");
  circ->add_option("--neck-rect", ca.neck_rect, "r,c,h,w of the neck in the input");
  circ->add_option("--out", ca.out, "profile JSON");
  circ->add_option("--csv", ca.csv, "raw profile CSV");
  circ->add_option("--smoothed-csv", ca.smoothed_csv, "smoothed profile CSV");

  MergeArgs ma;
  auto* merge = app.add_subcommand("merge", "merge filtered front and back frames into a cloud");
  merge->add_option("--front", ma.front, "filtered front frame")->required();
  merge->add_option("--back", ma.back, "filtered back frame")->required();
  merge->add_option("--out", ma.out, "merged PLY")->required();

  VolumeArgs va;
  auto* volume = app.add_subcommand("volume", "neck volume of a merged cloud");
  volume->add_option("--cloud", va.cloud, "merged PLY")->required();
  volume->add_option("--out", va.out, "report JSON");
  volume->add_option("--csv", va.csv, "slice profile CSV");

  PipelineArgs pl;
  auto* pipeline = app.add_subcommand("pipeline", "frames of both views to a report in one go");
  pipeline->add_option("--front-dir", pl.front_dir, "front frames")->required();
  pipeline->add_option("--back-dir", pl.back_dir, "back frames")->required();
  pipeline->add_option("--out", pl.out, "report JSON");
  pipeline->add_option("--csv", pl.csv, "slice profile CSV");
  pipeline->add_option("--cloud-out", pl.cloud_out, "merged PLY");

  ExperimentArgs ea;
  auto* experiment = app.add_subcommand("experiment", "repeated baseline vs bump measurements");
  experiment->add_option("--spec", ea.spec, "baseline phantom spec")->required();
  experiment->add_option("--bump-spec", ea.bump_spec, "phantom spec with the bump")->required();
  experiment->add_option("-n", ea.n, "runs per condition");
  experiment->add_option("--seed", ea.seed, "master seed");
  experiment->add_option("--frames", ea.frames, "frames averaged per capture");
  experiment->add_flag("--no-calibrate", ea.no_calibrate, "use --gap-mm instead of calibrating");
  experiment->add_option("--out", ea.out, "result JSON");

  CompareArgs cm;
  auto* compare = app.add_subcommand("compare", "compare two session reports");
  compare->add_option("--reference", cm.reference, "reference report")->required();
  compare->add_option("--current", cm.current, "current report")->required();
  compare->add_option("--out", cm.out, "delta JSON");

  for (auto* sub : {phantom, filter, locate, circ, merge, volume, pipeline, experiment}) add_config_flags(sub, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what(), kExitUsage);
    return kExitUsage;
  }

  try {
    if (*phantom) return run_phantom(pa, o);
    if (*filter) return run_filter(fa, o);
    if (*locate) return run_locate(la, o);
    if (*circ) return run_circ(ca, o);
    if (*merge) return run_merge(ma, o);
    if (*volume) return run_volume(va, o);
    if (*pipeline) return run_pipeline_cmd(pl, o);
    if (*experiment) return run_experiment_cmd(ea, o);
    if (*compare) return run_compare(cm);
  } catch (const UsageError& e) {
    print_error("usage", e.what(), kExitUsage);
    return kExitUsage;
  } catch (const Error& e) {
    const int code = is_io_error(e.code()) ? kExitIo : kExitFailure;
    print_error(std::string(to_string(e.code())), e.what(), code);
    return code;
  } catch (const fs::filesystem_error& e) {
    print_error("unwritable_path", e.what(), kExitIo);
    return kExitIo;
  } catch (const std::exception& e) {
    print_error("pipeline_failure", e.what(), kExitFailure);
    return kExitFailure;
  }
  return kExitUsage;
}
