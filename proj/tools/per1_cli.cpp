#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "per1/atlas.hpp"
#include "per1/boettcher.hpp"
#include "per1/fatou.hpp"
#include "per1/model.hpp"
#include "per1/puzzle.hpp"
#include "per1/verify.hpp"

using namespace per1;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Config {
  double escape_radius_floor = 1e3;
  double ray_step_tau = 1.1;
  double fatou_sector_W0 = 20.0;
  double snap_tol = 1e-3;
  // escape, basin, capture: raster budgets; links: internal ray links
  std::map<std::string, int> budgets{{"escape", 500}, {"basin", 2000}, {"capture", 4}, {"links", 8}};
  std::string palette_path;
  std::string output_dir = ".";

  json header() const {
    return {{"escape_radius_floor", escape_radius_floor}, {"ray_step_tau", ray_step_tau},
            {"fatou_sector_W0", fatou_sector_W0}, {"snap_tol", snap_tol}, {"budgets", budgets}};
  }
  RasterBudgets raster() const {
    RasterBudgets b;
    b.escape_iter = budgets.at("escape");
    b.basin_iter = budgets.at("basin");
    b.capture_depth = budgets.at("capture");
    b.sector_w0 = fatou_sector_W0;
    b.escape_floor = escape_radius_floor;
    return b;
  }
  RayOptions rays() const {
    RayOptions o;
    o.tau = ray_step_tau;
    o.escape_floor = escape_radius_floor;
    return o;
  }
};

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw UsageError("config key " + key + ": not a number: " + v);
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r"), e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

Config load_config(const std::string& path) {
  Config c;
  if (path.empty()) return c;
  std::ifstream is(path);
  if (!is) throw UsageError("--config: cannot read " + path);
  std::string line;
  int no = 0;
  while (std::getline(is, line)) {
    ++no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("--config: line " + std::to_string(no) + " is not key=value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key == "escape_radius_floor")
      c.escape_radius_floor = to_double(key, value);
    else if (key == "ray_step_tau")
      c.ray_step_tau = to_double(key, value);
    else if (key == "fatou_sector_W0")
      c.fatou_sector_W0 = to_double(key, value);
    else if (key == "snap_tol")
      c.snap_tol = to_double(key, value);
    else if (key == "palette_path")
      c.palette_path = value;
    else if (key == "output_dir")
      c.output_dir = value;
    else if (key == "budgets") {
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        const std::string name = trim(item.substr(0, colon));
        if (colon == std::string::npos || !c.budgets.count(name))
          throw UsageError("config key budgets: unknown budget '" + trim(item) + "'");
        c.budgets[name] = int(to_double(key, trim(item.substr(colon + 1))));
      }
    } else {
      throw UsageError("--config: unknown key '" + key + "' at line " + std::to_string(no));
    }
  }
  return c;
}

cplx parse_complex(const std::string& flag, const std::string& s) {
  const auto comma = s.find(',');
  try {
    std::size_t u = 0, v = 0;
    const std::string re = s.substr(0, comma);
    const double x = std::stod(re, &u);
    if (u != re.size()) throw std::invalid_argument(s);
    if (comma == std::string::npos) return x;
    const std::string im = s.substr(comma + 1);
    const double y = std::stod(im, &v);
    if (v != im.size()) throw std::invalid_argument(s);
    return {x, y};
  } catch (const std::exception&) {
    throw UsageError(flag + ": expected RE or RE,IM, got '" + s + "'");
  }
}

Window parse_window(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  try {
    while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  } catch (const std::exception&) {
    v.clear();
  }
  if (v.size() != 4 || !(v[1] > v[0]) || !(v[3] > v[2]))
    throw UsageError("--window: expected RE_MIN,RE_MAX,IM_MIN,IM_MAX, got '" + s + "'");
  return {v[0], v[1], v[2], v[3]};
}

RationalAngle angle(std::int64_t num, std::int64_t den) {
  if (den <= 0) throw UsageError("--den: must be positive");
  return RationalAngle(num, den);
}

json point(cplx z) { return {{"re", z.real()}, {"im", z.imag()}}; }

std::string artifact(const Config& c, const std::string& name) {
  std::filesystem::create_directories(c.output_dir);
  return (std::filesystem::path(c.output_dir) / name).string();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::InvalidArgument, "cannot write " + path);
  os << data;
}

std::string palette_csv() {
  using K = RegionLabel::Kind;
  std::ostringstream os;
  os << "label,depth_or_iters,r,g,b\n";
  auto row = [&](K k, int n) {
    const Rgb c = palette_color({k, n});
    os << region_kind_name(k) << ',' << n << ',' << int(c[0]) << ',' << int(c[1]) << ',' << int(c[2]) << '\n';
  };
  for (int n = 0; n < 16; n += 2) row(K::Escape, n);
  row(K::Adjacent, 0);
  for (int n = 1; n <= 4; ++n) row(K::Capture, n);
  row(K::Basin, 0);
  row(K::Petal, 0);
  row(K::Undetermined, 0);
  return os.str();
}

std::string jsonl_header(const Config& c, json extra = json::object()) {
  json h = {{"header", c.header()}};
  for (auto& [k, v] : extra.items()) h["header"][k] = v;
  return h.dump() + "\n";
}

void emit(const std::string& out, const std::string& data, const Config& c) {
  if (out.empty())
    std::cout << data;
  else
    write_file(artifact(c, out), data);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for the cubic family z^3 + a z^2 + z"};
  app.require_subcommand(1);
  std::string config_path;
  int threads = int(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  // shared flag storage
  std::string a_str, z_str, window_str, preset, out, csv, quadrant = "S", kind = "Y", suite = "all",
                                                          format = "text";
  std::int64_t num = 0, den = 1;
  double rmin = 1.000001, gmin = 0, level = 1.0;
  int depth = 0, width = 512, height = 512, samples = 256, links = -1, grid = 768, l = 2;
  bool supersample = false, wake = false, param = false, model = false, centres = false, nesting = false;

  auto* render_param = app.add_subcommand("render-param", "render a parameter-plane raster");
  auto* render_dyn = app.add_subcommand("render-dyn", "render a dynamical-plane raster");
  for (auto* s : {render_param, render_dyn}) {
    s->add_option("--preset", preset, "figure preset");
    s->add_option("--window", window_str, "RE_MIN,RE_MAX,IM_MIN,IM_MAX");
    s->add_option("--width", width)->check(CLI::PositiveNumber);
    s->add_option("--height", height)->check(CLI::PositiveNumber);
    s->add_flag("--supersample", supersample, "2x2 supersampling");
    s->add_option("--out", out, "PPM file name in output_dir");
    s->add_option("--csv", csv, "classification CSV file name in output_dir");
  }
  render_dyn->add_option("--a", a_str, "parameter RE[,IM]");

  auto* trace_ray = app.add_subcommand("trace-ray", "trace a dynamical external ray");
  trace_ray->add_option("--a", a_str, "parameter RE[,IM]")->required();
  auto* trace_param = app.add_subcommand("trace-param-ray", "trace a parameter external ray");
  trace_param->add_option("--quadrant", quadrant, "S, iS, -S or -iS");
  for (auto* s : {trace_ray, trace_param}) {
    s->add_option("--num", num, "angle numerator")->required();
    s->add_option("--den", den, "angle denominator")->required();
    s->add_option("--rmin", rmin, "stop at this radius (converted to g = log r)");
    s->add_option("--gmin", gmin, "stop at this potential g; overrides --rmin");
    s->add_option("--out", out, "JSONL file name in output_dir");
  }

  auto* equip = app.add_subcommand("equipotential", "closed curve of constant potential");
  equip->add_option("--a", a_str, "parameter RE[,IM] (dynamical plane)");
  equip->add_flag("--param", param, "parameter-plane equipotential");
  equip->add_option("--level", level, "potential g = log r")->check(CLI::PositiveNumber);
  equip->add_option("--samples", samples)->check(CLI::PositiveNumber);
  equip->add_option("--out", out);

  auto* fatou = app.add_subcommand("fatou", "attracting Fatou coordinate");
  fatou->add_option("--a", a_str, "parameter RE[,IM]");
  fatou->add_flag("--model", model, "use z^2 + 1/4");
  fatou->add_option("--z", z_str, "point RE[,IM]")->required();

  auto* phi = app.add_subcommand("phi", "the parametrization Phi of a component");
  phi->add_option("--a", a_str, "parameter RE[,IM]")->required();
  phi->add_option("--depth", depth, "capture depth; 0 with no --capture means U0");
  bool capture_flag = false;
  phi->add_flag("--capture", capture_flag, "capture component of --depth");

  auto* iray = app.add_subcommand("internal-ray", "internal ray of angle num/den, den = 2^l - 1");
  iray->add_option("--num", num)->required();
  iray->add_option("--den", den)->required();
  iray->add_option("--a", a_str, "dynamical ray of f_a; default is the model");
  iray->add_flag("--param", param, "parameter internal ray in U0");
  iray->add_option("--links", links);
  iray->add_option("--out", out);

  auto* misi = app.add_subcommand("misiurewicz", "Misiurewicz-parabolic parameters");
  misi->add_option("--depth", depth)->required()->check(CLI::NonNegativeNumber);
  misi->add_option("--window", window_str, "RE_MIN,RE_MAX,IM_MIN,IM_MAX");
  misi->add_option("--format", format)->check(CLI::IsMember({"text", "json"}));

  auto* cap = app.add_subcommand("capture", "capture depth of a parameter, or capture centres");
  cap->add_option("--a", a_str, "parameter RE[,IM]");
  cap->add_flag("--centres", centres, "list centres of depth --depth");
  cap->add_option("--depth", depth);
  cap->add_option("--window", window_str);

  auto* puz = app.add_subcommand("puzzle", "dynamical puzzle pieces");
  puz->add_option("--a", a_str, "parameter RE[,IM]")->required();
  puz->add_option("--depth", depth)->required();
  puz->add_option("--kind", kind)->check(CLI::IsMember({"Y", "X"}));
  puz->add_flag("--wake", wake, "Y graph with the ray 1/2");
  puz->add_option("--l", l, "X graph internal angle 1/(2^l - 1)");
  puz->add_option("--grid", grid)->check(CLI::PositiveNumber);
  puz->add_flag("--nesting", nesting, "X graph nesting report as CSV");

  auto* ppuz = app.add_subcommand("para-puzzle", "parameter graph in the closure of W(0) and S");
  ppuz->add_option("--depth", depth)->required();
  ppuz->add_option("--kind", kind)->check(CLI::IsMember({"Y", "X"}));
  ppuz->add_option("--out", out);

  auto* wk = app.add_subcommand("wake", "whether a lies in the wake of 0");
  wk->add_option("--a", a_str, "parameter RE[,IM]")->required();

  auto* ver = app.add_subcommand("verify", "run the acceptance checks");
  ver->add_option("--suite", suite)->check(CLI::IsMember(suite_names()));
  ver->add_option("--format", format)->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const Config cfg = load_config(config_path);
    auto need_a = [&](const char* flag = "--a") {
      if (a_str.empty()) throw UsageError(std::string(flag) + ": required");
      return parse_complex(flag, a_str);
    };

    if (*render_param || *render_dyn) {
      RasterJob job;
      if (!preset.empty()) {
        const auto names = figure_preset_names();
        if (std::find(names.begin(), names.end(), preset) == names.end())
          throw UsageError("--preset: unknown preset '" + preset + "'");
        job = figure_preset(preset);
        if ((job.mode == RasterMode::Dynamical) != bool(*render_dyn))
          throw UsageError("--preset: '" + preset + "' belongs to the other render command");
      } else {
        job.mode = *render_dyn ? RasterMode::Dynamical : RasterMode::Parameter;
        if (*render_dyn) job.window = {-2.5, 2.5, -2.5, 2.5};
      }
      if (*render_dyn && (preset.empty() || !a_str.empty())) job.a = need_a();
      if (!window_str.empty()) job.window = parse_window(window_str);
      if (render_param->count("--width") || render_dyn->count("--width")) job.width = width;
      if (render_param->count("--height") || render_dyn->count("--height")) job.height = height;
      job.supersample = supersample;
      job.budgets = cfg.raster();
      job.threads = threads;
      const Image img = render(job);
      const std::string name = out.empty() ? (preset.empty() ? std::string(*render_dyn ? "dyn" : "param") : preset) + ".ppm" : out;
      const std::string path = artifact(cfg, name);
      write_ppm(img, path);
      if (!csv.empty()) write_file(artifact(cfg, csv), labels_to_csv(job, img));
      if (!cfg.palette_path.empty()) write_file(cfg.palette_path, palette_csv());
      std::map<std::string, long> counts;
      for (const auto& lab : img.labels) ++counts[region_kind_name(lab.kind)];
      json summary = {{"header", cfg.header()},
                      {"image", path},
                      {"width", img.width},
                      {"height", img.height},
                      {"window", {job.window.re_min, job.window.re_max, job.window.im_min, job.window.im_max}},
                      {"labels", counts}};
      if (job.mode == RasterMode::Dynamical) summary["a"] = point(job.a);
      std::cout << summary.dump(2) << "\n";
      return 0;
    }

    if (*trace_ray || *trace_param) {
      if (!(rmin > 1) && gmin <= 0) throw UsageError("--rmin: must exceed 1");
      const double g = gmin > 0 ? gmin : std::log(rmin);
      const RationalAngle t = angle(num, den);
      RayTrace r;
      json extra = {{"log_rmin", g}};
      if (*trace_ray) {
        const cplx a = need_a();
        r = trace_dynamical_ray(a, t, g, 0, cfg.rays());
        // landing at a preimage of 0: report the exact preimage as well
        for (int n = 1; n <= 6 && r.landing.kind == Landing::Kind::Landed; ++n)
          if (auto s = snap_to_zero_preimage(a, r.landing.point, n, cfg.snap_tol)) {
            extra["snapped_landing"] = point(*s);
            extra["snap_depth"] = n;
            break;
          }
      } else {
        Quadrant q;
        try {
          q = parse_quadrant(quadrant);
        } catch (const DomainError&) {
          throw UsageError("--quadrant: expected S, iS, -S or -iS, got '" + quadrant + "'");
        }
        r = trace_parameter_ray(q, t, g, cfg.rays());
      }
      emit(out, jsonl_header(cfg, extra) + ray_to_jsonl(r), cfg);
      return 0;
    }

    if (*equip) {
      std::vector<cplx> pts;
      if (param) {
        pts = parameter_equipotential(level, samples);
      } else {
        pts = dynamical_equipotential(need_a(), level, samples);
      }
      emit(out, jsonl_header(cfg, {{"level", level}}) + polylines_to_jsonl({{param ? "parameter" : "dynamical", pts}}),
           cfg);
      return 0;
    }

    if (*fatou) {
      const cplx z = parse_complex("--z", z_str);
      FatouPolicy p;
      p.sector_w0 = cfg.fatou_sector_W0;
      p.escape_floor = cfg.escape_radius_floor;
      if (!model && a_str.empty()) throw UsageError("--a: required unless --model");
      const FatouCoordinate fc = model ? FatouCoordinate::model(p) : FatouCoordinate(need_a(), p);
      cplx d;
      int it = 0;
      const cplx v = fc.eval(z, &d, &it);
      std::string why;
      const bool petal = fc.in_petal(z, &why);
      std::cout << json{{"header", cfg.header()},
                        {"z", point(z)},
                        {"fatou", point(v)},
                        {"derivative", point(d)},
                        {"iterations", it},
                        {"in_petal", petal},
                        {"sector_threshold", fc.sector_threshold()}}
                       .dump(2)
                << "\n";
      return 0;
    }

    if (*phi) {
      const cplx a = need_a();
      const cplx v = capture_flag ? phi_capture(a, depth) : phi_adjacent(a);
      std::cout << json{{"a", point(a)},
                        {"component", capture_flag ? "capture" : "U0"},
                        {"depth", capture_flag ? depth : 0},
                        {"phi", point(v)},
                        {"model_fatou", point(model_fatou(v))}}
                       .dump(2)
                << "\n";
      return 0;
    }

    if (*iray) {
      InternalAngle th;
      try {
        th = InternalAngle::parse(std::to_string(num) + "/" + std::to_string(den));
      } catch (const DomainError& e) {
        throw UsageError(std::string("--num/--den: ") + e.what());
      }
      const int n = links >= 0 ? links : cfg.budgets.at("links");
      std::vector<std::pair<std::string, Polyline>> curves;
      if (param) {
        const auto c = parameter_internal_ray_u0(th, n);
        curves.push_back({"parameter " + th.str(), c.points});
      } else {
        const InternalRay r = a_str.empty() ? model_internal_ray(th, n) : dynamical_internal_ray(need_a(), th, n);
        for (std::size_t k = 0; k < r.links.size(); ++k) curves.push_back({"link " + std::to_string(k), r.links[k]});
        curves.push_back({"tail", {r.tail}});
      }
      emit(out, jsonl_header(cfg, {{"angle", th.str()}, {"links", n}}) + polylines_to_jsonl(curves), cfg);
      return 0;
    }

    if (*misi) {
      const Window w = window_str.empty() ? Window{-3, 3, -3, 3} : parse_window(window_str);
      const auto roots = solve_misiurewicz_parabolic(depth, w);
      if (format == "json") {
        json arr = json::array();
        for (cplx a : roots) arr.push_back(point(a));
        std::cout << json{{"depth", depth}, {"newton_tol", SolverBudget{}.newton_tol}, {"roots", arr}}.dump(2) << "\n";
      } else {
        std::cout << "# depth " << depth << ", residual |f^(n+1)(c-)| < " << SolverBudget{}.newton_tol << "\n";
        std::cout.precision(15);
        for (cplx a : roots) {
          if (std::abs(a.imag()) < 1e-12)
            std::cout << a.real() << "\n";
          else
            std::cout << a.real() << (a.imag() < 0 ? " - " : " + ") << std::abs(a.imag()) << "i\n";
        }
      }
      return 0;
    }

    if (*cap) {
      if (centres) {
        const Window w = window_str.empty() ? Window{-3, 3, -3, 3} : parse_window(window_str);
        json arr = json::array();
        for (cplx c : solve_critical_relation(OrbitTarget::CPlus, depth, w)) arr.push_back(point(c));
        std::cout << json{{"depth", depth}, {"centres", arr}}.dump(2) << "\n";
        return 0;
      }
      const cplx a = need_a();
      CapturePolicy p;
      p.sector_w0 = cfg.fatou_sector_W0;
      p.basin_iter = cfg.budgets.at("basin");
      p.escape_iter = cfg.budgets.at("escape");
      const int maxd = cap->count("--depth") ? depth : cfg.budgets.at("capture");
      const CaptureVerdict v = capture_depth(a, maxd, p);
      std::cout << json{{"header", cfg.header()},
                        {"a", point(a)},
                        {"verdict", capture_kind_name(v.kind)},
                        {"depth", v.n},
                        {"resolution", v.resolution}}
                       .dump(2)
                << "\n";
      return 0;
    }

    if (*puz) {
      const cplx a = need_a();
      if (nesting) {
        if (kind != "X") throw UsageError("--nesting: needs --kind X");
        std::vector<int> depths;
        for (int k = 0; k <= depth; ++k) depths.push_back(k);
        const auto rows = nesting_report(a, l, depths, default_grid(a, 1.0, grid));
        std::cout << nesting_to_csv(rows);
        return 0;
      }
      const DynGraph g = kind == "X" ? build_graph_X(a, depth, l) : build_graph_Y(a, depth, wake);
      const PuzzleMap map(g, default_grid(a, g.log_r, grid));
      const std::string path = artifact(cfg, "puzzle_depth" + std::to_string(depth) + ".json");
      write_file(path, pieces_to_json(map));
      std::cout << json{{"a", point(a)},
                        {"kind", kind},
                        {"depth", depth},
                        {"arcs", g.arcs.size()},
                        {"pieces", map.pieces().size()},
                        {"grid", grid},
                        {"pixel", map.grid().pixel()},
                        {"file", path}}
                       .dump(2)
                << "\n";
      return 0;
    }

    if (*ppuz) {
      const ParaGraph pg = build_para_graph(kind == "X" ? DynGraph::Kind::X : DynGraph::Kind::Y, depth);
      std::vector<std::pair<std::string, Polyline>> curves;
      for (const auto& arc : pg.arcs) curves.push_back({arc.label.str(), arc.polyline});
      json h = {{"notes", pg.notes}, {"arcs", pg.arcs.size()}, {"clusters_at_1e-3", arc_clusters(pg.arcs, 1e-3)}};
      emit(out, jsonl_header(cfg, h) + polylines_to_jsonl(curves), cfg);
      return 0;
    }

    if (*wk) {
      const cplx a = need_a();
      std::cout << json{{"a", point(a)}, {"wake", wake_test(a)}, {"landing_tol", 5e-3}}.dump() << "\n";
      return 0;
    }

    if (*ver) {
      const auto results = run_suite(suite, threads);
      std::cout << (format == "json" ? report_json(results) : report_text(results));
      return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.pass; }) ? 0 : 1;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << json{{"error", e.name()}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 2;
}
