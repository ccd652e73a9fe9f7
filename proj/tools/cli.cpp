#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "ncr/complexretract.hpp"
#include "ncr/cut.hpp"
#include "ncr/errors.hpp"
#include "ncr/flowretract.hpp"
#include "ncr/model_io.hpp"
#include "ncr/strat.hpp"
#include "ncr/verify.hpp"

namespace ncr::cli {
namespace {

class IoError : public Error {
 public:
  using Error::Error;
};

struct Config {
  std::string model;
  std::string at;
  std::string point;
  std::optional<double> level;
  std::string exponents;
  std::uint64_t seed = 1;
  std::optional<int> samples;
  std::optional<double> tol;
  bool numeric = false;
  bool real = false;
  std::string out;
  std::string trace;
};

std::string num(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string cnum(cplx z) {
  if (z.imag() == 0.0) return num(z.real());
  std::string im = num(std::abs(z.imag())) + "i";
  if (z.real() == 0.0) return (z.imag() < 0 ? "-" : "") + im;
  return num(z.real()) + (z.imag() < 0 ? "-" : "+") + im;
}

std::string cpoint(const CPoint& z) {
  std::string s = "(";
  for (std::size_t i = 0; i < z.size(); ++i) s += (i ? ", " : "") + cnum(z[i]);
  return s + ")";
}

std::string join_ints(const std::vector<int>& v, const char* sep = ",") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + std::to_string(v[i]);
  return s;
}

std::string join_strs(const std::vector<std::string>& v, const char* sep = ",") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

std::string coord_header(int dim, char prefix = 'x') {
  std::string s;
  for (int i = 1; i <= dim; ++i) s += std::string(",") + prefix + std::to_string(i);
  return s;
}

std::string coord_fields(std::span<const double> x) {
  std::string s;
  for (double v : x) s += "," + num(v);
  return s;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << text;
  if (!f) throw IoError("write failed for '" + path + "'");
}

cplx parse_cplx(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), ::isspace), s.end());
  auto to_d = [&](const std::string& t) {
    if (t.empty() || t == "+") return 1.0;
    if (t == "-") return -1.0;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size()) throw ConfigError("bad number '" + s + "'");
    return v;
  };
  if (s.empty()) throw ConfigError("empty coordinate");
  if (s.back() != 'i') return to_d(s);
  s.pop_back();
  std::size_t split = std::string::npos;
  for (std::size_t i = s.size(); i-- > 1;)
    if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
      split = i;
      break;
    }
  if (split == std::string::npos) return {0.0, to_d(s)};
  return {to_d(s.substr(0, split)), to_d(s.substr(split))};
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

struct PointArg {
  std::string chart;  // empty for an ambient point
  CPoint z;
  std::optional<SignSheet> sheet;
  std::string special;

  bool is_real() const {
    return std::all_of(z.begin(), z.end(), [](cplx v) { return v.imag() == 0.0; });
  }
  Point real() const {
    if (!is_real()) throw ConfigError("point has imaginary parts where real coordinates are required");
    Point x;
    for (cplx v : z) x.push_back(v.real());
    return x;
  }
};

SignSheet parse_sheet(const ChartSpec& chart, const std::string& s) {
  auto coords = chart.divisor_coords();
  if (s.size() != coords.size()) throw ConfigError("sheet '" + s + "' needs one sign per divisor coordinate");
  SignSheet out;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (s[i] != '+' && s[i] != '-') throw ConfigError("sheet signs must be + or -");
    out.signs[coords[i]] = s[i] == '+' ? 1 : -1;
  }
  return out;
}

// Forms: "chart:ID;x=a,b[;s=+-]", "ID:a,b", "ambient:a,b", or a special point name.
PointArg parse_point(const NCModel& m, const std::string& text) {
  if (text.empty()) throw ConfigError("a point is required (--point or --at)");
  PointArg p;
  auto parts = split(text, ';');
  const std::string& head = parts[0];
  std::string coords, sheet;
  auto colon = head.find(':');
  if (colon == std::string::npos) {
    const SpecialPoint* sp = m.special_point(head);
    if (!sp) throw ConfigError("unknown point '" + head + "'");
    p.special = sp->name;
    if (!sp->chart.empty()) {
      p.chart = sp->chart;
      p.z.assign(sp->coords.begin(), sp->coords.end());
    } else {
      p.z.assign(sp->ambient.begin(), sp->ambient.end());
    }
  } else {
    std::string key = head.substr(0, colon), rest = head.substr(colon + 1);
    if (key == "chart") {
      p.chart = rest;
    } else if (key == "ambient") {
      coords = rest;
    } else {
      p.chart = key;
      coords = rest;
    }
    for (std::size_t i = 1; i < parts.size(); ++i) {
      auto eq = parts[i].find('=');
      if (eq == std::string::npos) throw ConfigError("bad point field '" + parts[i] + "'");
      std::string k = parts[i].substr(0, eq), v = parts[i].substr(eq + 1);
      if (k == "x" || k == "z") coords = v;
      else if (k == "s") sheet = v;
      else throw ConfigError("bad point field '" + parts[i] + "'");
    }
    for (const auto& c : split(coords, ',')) p.z.push_back(parse_cplx(c));
  }
  if (!p.chart.empty()) {
    if (std::none_of(m.charts.begin(), m.charts.end(), [&](const ChartSpec& c) { return c.id == p.chart; }))
      throw ConfigError("unknown chart '" + p.chart + "'");
    const ChartSpec& ch = m.chart(p.chart);
    if (static_cast<int>(p.z.size()) != ch.dim)
      throw ConfigError("chart '" + ch.id + "' expects " + std::to_string(ch.dim) + " coordinates");
    if (!sheet.empty()) p.sheet = parse_sheet(ch, sheet);
  } else if (m.modification && static_cast<int>(p.z.size()) != m.modification->ambient_dim) {
    throw ConfigError("ambient point needs " + std::to_string(m.modification->ambient_dim) + " coordinates");
  }
  return p;
}

// Sheet from the signs of the coordinates; zero coordinates take "+".
SignSheet sheet_of(const ChartSpec& ch, const Point& x, const std::optional<SignSheet>& given) {
  if (given) return *given;
  SignSheet s;
  for (int i : ch.divisor_coords()) s.signs[i] = x[i] < 0 ? -1 : 1;
  return s;
}

NCModel load(const std::string& name_or_path) {
  if (name_or_path.empty()) throw ConfigError("--model is required");
  if (std::filesystem::exists(name_or_path)) return load_model_file(name_or_path);
  std::string stem = std::filesystem::path(name_or_path).stem().string();
  for (const auto& n : catalog_names())
    if (n == name_or_path || n == stem) return catalog_model(n);
  throw IoError("model file '" + name_or_path + "' not found");
}

NCModel load_valid(const Config& cfg) {
  NCModel m = load(cfg.model);
  require_valid(m);
  return m;
}

FlowOptions flow_options(const Config& cfg, bool record) {
  FlowOptions o;
  o.record = record;
  if (cfg.tol) o.ode.tol = *cfg.tol;
  return o;
}

// ---- subcommands ---------------------------------------------------------------

int cmd_describe(const Config& cfg, std::ostream& out) {
  NCModel m = load_valid(cfg);
  out << "model " << m.name << "\n";
  out << "sign mode " << (m.sign_mode == SignMode::Nonnegative ? "nonnegative" : "general") << ", level bound "
      << num(m.level_bound) << "\n";
  out << "components\n";
  for (const auto& c : m.components)
    out << "  " << std::left << std::setw(6) << c.id << " multiplicity " << c.multiplicity
        << (two_sidedness(m, c.id) ? "  two-sided" : "  one-sided") << "\n";
  out << "charts\n";
  for (const auto& c : m.charts) {
    out << "  " << std::left << std::setw(6) << c.id << (c.field == FieldKind::Complex ? " complex" : " real   ")
        << " dim " << c.dim << "  exponents (" << join_ints(c.exponents) << ")  g = " << c.unit_factor.str(c.var_prefix())
        << "  radius " << num(c.domain_radius);
    std::vector<std::string> labels;
    for (const auto& [i, l] : c.divisor_labels) labels.push_back(std::string(1, c.var_prefix()) + std::to_string(i + 1) + "=" + l);
    if (!labels.empty()) out << "  [" << join_strs(labels, " ") << "]";
    out << "\n";
  }
  out << "transitions " << m.transitions.size() << "\n";
  DualComplex dc = build_dual_complex(m);
  out << "dual complex\n";
  std::string csv = "components,depth,witness_chart,witness\n";
  for (const auto& s : dc.simplices) {
    out << "  {" << join_strs(s.components) << "}  depth " << s.depth << "  at " << s.witness_chart << " "
        << format_point(s.witness) << "\n";
    csv += "\"" + join_strs(s.components, " ") + "\"," + std::to_string(s.depth) + "," + s.witness_chart + ",\"" +
           format_point(s.witness) + "\"\n";
  }
  if (m.modification) {
    out << "modification to dimension " << m.modification->ambient_dim << ", f = " << m.modification->ambient_f.str()
        << "\n";
  }
  for (const auto& sp : m.special_points) out << "special point " << sp.name << "\n";
  for (const auto& st : m.stratifications)
    out << "declared stratification " << st.name << " (" << st.strata.size() << " strata, expected "
        << (st.expect_pass ? "pass" : "fail") << ")\n";
  if (!cfg.out.empty()) write_file(cfg.out, csv);
  return kOk;
}

int cmd_stratify(const Config& cfg, std::ostream& out) {
  NCModel m = load_valid(cfg);
  Stratification s = canonical_stratification(m);
  for (const auto& st : s.strata) {
    out << std::left << std::setw(14) << st.label << " depth " << st.depth << "  {" << join_strs(st.components) << "}  ";
    std::vector<std::string> pieces;
    for (const auto& p : st.pieces) pieces.push_back(p.chart + ":" + p.quadrant.label());
    out << join_strs(pieces, " ") << "\n";
  }
  const std::string where = cfg.point.empty() ? cfg.at : cfg.point;
  if (!where.empty()) {
    PointArg p = parse_point(m, where);
    if (p.chart.empty()) throw ConfigError("stratify needs a chart point");
    const ChartSpec& ch = m.chart(p.chart);
    Point x = p.real();
    int idx = s.locate(ch.id, x, ch.zero_tol());
    out << "point " << format_point(x) << " in chart " << ch.id << ": "
        << (idx < 0 ? std::string("off the central fibre") : s.strata[idx].label) << "\n";
  }
  if (!cfg.out.empty()) write_file(cfg.out, stratification_to_json(s));
  return kOk;
}

int cmd_cut(const Config& cfg, std::ostream& out) {
  NCModel m = load_valid(cfg);
  PointArg p = parse_point(m, cfg.point.empty() ? cfg.at : cfg.point);
  if (p.chart.empty()) throw ConfigError("cut needs a chart point");
  const ChartSpec& ch = m.chart(p.chart);
  Point x = p.real();
  std::string csv = "chart,sheet" + coord_header(ch.dim) + "\n";
  for (const auto& cp : fibre(ch, x)) csv += cp.chart + "," + cp.sheet.label() + coord_fields(cp.x) + "\n";
  out << csv;
  if (!cfg.out.empty()) write_file(cfg.out, csv);
  return kOk;
}

int retract_complex(const Config& cfg, const ChartSpec& ch, const PointArg& p, std::ostream& out) {
  ComplexRetraction cr(ch, cfg.numeric ? FieldMode::Numeric : FieldMode::Auto);
  PolarPoint pp = polar_blowup(ch, p.z);
  PolarPoint r = cr.retract(pp);
  CPoint target = polar_down(ch, r);
  out << "chart " << ch.id << " (complex)\n";
  out << "point " << cpoint(p.z) << "\n";
  out << "target " << cpoint(target) << "\n";
  out << "level " << num(cr.level(pp)) << "\n";
  out << "alpha " << num(cr.alpha(pp)) << " -> " << num(cr.alpha(r)) << "\n";
  out << "method " << (cr.closed_form() && !cfg.numeric ? "closed-form" : "numeric") << "\n";
  if (!cfg.out.empty()) {
    std::string csv = "chart,level,alpha";
    for (int i = 1; i <= ch.dim; ++i) csv += ",re_z" + std::to_string(i) + ",im_z" + std::to_string(i);
    csv += "\n" + ch.id + "," + num(cr.level(pp)) + "," + num(cr.alpha(r));
    for (cplx v : target) csv += "," + num(v.real()) + "," + num(v.imag());
    write_file(cfg.out, csv + "\n");
  }
  return kOk;
}

int cmd_retract(const Config& cfg, std::ostream& out) {
  NCModel m = load_valid(cfg);
  PointArg p = parse_point(m, cfg.point.empty() ? cfg.at : cfg.point);
  const FieldMode mode = cfg.numeric ? FieldMode::Numeric : FieldMode::Auto;
  if (p.chart.empty()) {
    Point q = p.real();
    AmbientRetraction a = retract(m, q, mode);
    out << "point " << format_point(q) << "\n";
    if (a.on_central_fibre) {
      out << "target " << format_point(a.target) << "\ndelta 0\n";
    } else {
      out << "lift " << a.chart << " " << a.lifted.sheet.label() << " " << format_point(a.lifted.x) << "\n";
      out << "retracted " << format_point(a.retracted.x) << "\n";
      out << "target " << format_point(a.target) << "\n";
      out << "delta " << num(a.delta) << "\n";
    }
    if (!cfg.out.empty())
      write_file(cfg.out, "chart,sheet,delta" + coord_header(static_cast<int>(q.size()), 'q') + "\n" + a.chart + "," +
                              a.lifted.sheet.label() + "," + num(a.delta) + coord_fields(a.target) + "\n");
    return kOk;
  }
  const ChartSpec& ch = m.chart(p.chart);
  if (ch.field == FieldKind::Complex || !p.is_real()) return retract_complex(cfg, ch, p, out);
  Point x = p.real();
  SignSheet sheet = sheet_of(ch, x, p.sheet);
  ChartRetraction cr(m, ch.id, sheet, mode);
  RetractStep s;
  if (cfg.numeric && cfg.tol) {
    FlowTrace t = cr.flow_to_boundary(x, flow_options(cfg, false));
    s = {t.terminal.x, t.hit_time};
  } else {
    s = cr.retract(x);
  }
  out << "chart " << ch.id << " sheet " << sheet.label() << "\n";
  out << "point " << format_point(x) << "\n";
  out << "target " << format_point(s.x) << "\n";
  out << "delta " << num(s.delta) << "\n";
  out << "method " << (cr.closed_form() ? "closed-form" : "numeric") << "\n";
  if (!cfg.out.empty())
    write_file(cfg.out, "chart,sheet,delta" + coord_header(ch.dim) + "\n" + ch.id + "," + sheet.label() + "," +
                            num(s.delta) + coord_fields(s.x) + "\n");
  return kOk;
}

int cmd_flow(const Config& cfg, std::ostream& out) {
  NCModel m = load_valid(cfg);
  PointArg p = parse_point(m, cfg.point.empty() ? cfg.at : cfg.point);
  if (p.chart.empty()) throw ConfigError("flow needs a chart point");
  const ChartSpec& ch = m.chart(p.chart);
  if (ch.field != FieldKind::Real) throw DomainError("flow runs on real charts");
  Point x = p.real();
  SignSheet sheet = sheet_of(ch, x, p.sheet);
  ChartRetraction cr(m, ch.id, sheet, cfg.numeric ? FieldMode::Numeric : FieldMode::Auto);
  FlowTrace t = cr.flow_to_boundary(x, flow_options(cfg, true));
  out << "chart " << ch.id << " sheet " << sheet.label() << " field " << cr.field().kind << "\n";
  out << "start " << format_point(x) << "\n";
  out << "hit time " << num(t.hit_time) << "\n";
  out << "terminal " << format_point(t.terminal.x) << "\n";
  out << "steps " << t.steps << ", trace points " << t.points.size() << "\n";
  const std::string path = cfg.trace.empty() ? cfg.out : cfg.trace;
  if (!path.empty()) {
    std::string csv = "t" + coord_header(ch.dim) + ",fprime\n";
    for (const auto& tp : t.points) csv += num(tp.t) + coord_fields(tp.x) + "," + num(tp.fprime) + "\n";
    write_file(path, csv);
  }
  return kOk;
}

int cmd_fibre(const Config& cfg, std::ostream& out) {
  NCModel m = load_valid(cfg);
  if (!cfg.level) throw ConfigError("fibre needs -c/--level");
  PointArg p = parse_point(m, cfg.at.empty() ? cfg.point : cfg.at);
  if (p.chart.empty()) throw ConfigError("fibre needs a point with a chart lift");
  const ChartSpec& ch = m.chart(p.chart);
  std::string csv;
  if (cfg.real) {
    if (ch.field != FieldKind::Real) throw DomainError("--real needs a real chart");
    csv = "chart,sheet" + coord_header(ch.dim) + ",f\n";
    for (const auto& cp : specialization_fibre_real(m, ch.id, p.real(), *cfg.level))
      csv += cp.chart + "," + cp.sheet.label() + coord_fields(cp.x) + "," + num(eval_f(ch, cp.x)) + "\n";
  } else {
    csv = "chart,index";
    for (int i = 1; i <= ch.dim; ++i) csv += ",re_z" + std::to_string(i) + ",im_z" + std::to_string(i);
    csv += ",abs_f,arg_f\n";
    int k = 0;
    for (const auto& z : complex_fibre_points(ch, p.z, cplx(*cfg.level))) {
      csv += ch.id + "," + std::to_string(k++);
      for (cplx v : z) csv += "," + num(v.real()) + "," + num(v.imag());
      cplx f = eval_f(ch, z);
      csv += "," + num(std::abs(f)) + "," + num(std::arg(f)) + "\n";
    }
  }
  out << csv;
  if (!cfg.out.empty()) write_file(cfg.out, csv);
  return kOk;
}

int cmd_milnor(const Config& cfg, std::ostream& out) {
  NCModel m = load_valid(cfg);
  const std::string where = cfg.at.empty() ? cfg.point : cfg.at;
  MilnorFibration mf;
  PointArg p = parse_point(m, where);
  if (!p.special.empty() && (m.special_point(p.special)->chart.empty() || !m.special_point(p.special)->exceptional.empty()))
    mf = milnor_fibration(m, p.special);
  else if (!p.chart.empty())
    mf = milnor_fibration_at(m.chart(p.chart), p.real());
  else
    throw ConfigError("milnor needs a special point or a chart point");
  out << "Milnor fibre at " << (p.special.empty() ? where : p.special) << "\n";
  out << std::left << std::setw(16) << "stratum" << std::setw(12) << "exponents" << std::setw(8) << "chi_S"
      << std::setw(8) << "chi_F" << std::setw(8) << "pi0" << "contribution\n";
  std::string csv = "stratum,k,exponents,chi_stratum,chi_level,level_components,contribution\n";
  for (const auto& s : mf.strata) {
    const std::string name = "{" + join_strs(s.components) + "}";
    out << std::left << std::setw(16) << name << std::setw(12) << join_ints(s.torus.exponents) << std::setw(8)
        << s.chi_stratum << std::setw(8) << s.chi_level << std::setw(8) << s.level_components << s.contribution
        << "\n";
    csv += "\"" + join_strs(s.components, " ") + "\"," + std::to_string(s.torus.k) + ",\"" +
           join_ints(s.torus.exponents, " ") + "\"," + std::to_string(s.chi_stratum) + "," +
           std::to_string(s.chi_level) + "," + std::to_string(s.level_components) + "," +
           std::to_string(s.contribution) + "\n";
  }
  out << "chi = " << mf.chi << "\n";
  out << "pi0 = " << mf.pi0 << "\n";
  csv += "total,,,,,," + std::to_string(mf.chi) + "\n";
  if (cfg.real) {
    if (p.chart.empty() || !cfg.level) throw ConfigError("--real needs a chart point and -c/--level");
    const ChartSpec& ch = m.chart(p.chart);
    MilnorRealCount r = milnor_components_real(m, ch.id, p.real(), 0.5 * ch.domain_radius, *cfg.level,
                                               cfg.samples.value_or(2000), cfg.seed);
    out << "real fibre components " << r.components << " (expected " << r.expected << ", "
        << (r.conclusive ? "conclusive" : "inconclusive") << ", " << r.accepted_samples << " samples)\n";
  }
  if (!cfg.out.empty()) write_file(cfg.out, csv);
  return kOk;
}

int cmd_alpha_fibre(const Config& cfg, std::ostream& out) {
  std::vector<int> ex;
  for (const auto& t : split(cfg.exponents, ',')) {
    int v = 0;
    auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size()) throw ConfigError("bad exponent '" + t + "'");
    ex.push_back(v);
  }
  if (ex.empty()) throw ConfigError("alpha-fibre needs --exponents");
  const double theta = cfg.level.value_or(0.0);
  const int count = alpha_fibre_components(ex);
  out << "exponents (" << join_ints(ex) << ")\n";
  out << "components " << count << "\n";
  out << "monodromy " << join_ints(monodromy_permutation(ex, theta), " ") << "\n";
  const int n = cfg.samples.value_or(0);
  if (n > 0) {
    if (ex.size() > 2) throw ConfigError("level-set sampling supports at most two exponents");
    auto rows = alpha_level_set(ex, theta, n);
    std::string csv = ex.size() == 1 ? "alpha1,component\n" : "alpha1,alpha2,component\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) csv += (i ? "," : "") + (i + 1 == r.size() ? std::to_string(static_cast<int>(r[i])) : num(r[i]));
      csv += "\n";
    }
    if (cfg.out.empty()) out << csv;
    else write_file(cfg.out, csv);
  }
  return kOk;
}

int cmd_check(const Config& cfg, std::ostream& out) {
  std::vector<NCModel> models;
  if (cfg.model.empty() || cfg.model == "catalog") {
    for (const auto& n : catalog_names()) models.push_back(catalog_model(n));
  } else {
    models.push_back(load(cfg.model));
  }
  VerifyOptions opts;
  opts.seed = cfg.seed;
  if (cfg.samples) opts.samples = *cfg.samples;
  bool ok = true;
  std::string csv = Report::csv_header() + "\n";
  for (const auto& m : models) {
    Report r = verify_suite(m, opts);
    out << r.table() << "\n";
    ok = ok && r.all_pass();
    std::string body = r.csv();
    csv += body.substr(body.find('\n') + 1);
  }
  out << (ok ? "PASS" : "FAIL") << " " << models.size() << " model(s)\n";
  if (!cfg.out.empty()) write_file(cfg.out, csv);
  return ok ? kOk : kCheckFailed;
}

int cmd_trivialize(const Config& cfg, std::ostream& out) {
  NCModel m = load_valid(cfg);
  PointArg p = parse_point(m, cfg.point.empty() ? cfg.at : cfg.point);
  if (p.chart.empty()) throw ConfigError("trivialize needs a chart point");
  const ChartSpec& ch = m.chart(p.chart);
  if (ch.field != FieldKind::Real) throw DomainError("trivialize runs on real charts");
  Point x = p.real();
  SignSheet sheet = sheet_of(ch, x, p.sheet);
  ChartRetraction cr(m, ch.id, sheet, cfg.numeric ? FieldMode::Numeric : FieldMode::Auto);
  std::string csv = "chart,sheet,level,side" + coord_header(ch.dim) + "\n";
  if (cfg.level) {
    // Inverse direction: base point on X' and a level.
    Trivialization t{CutPoint{ch.id, x, sheet}, std::abs(*cfg.level), sheet_side(ch, sheet)};
    CutPoint q = cr.untrivialize(t);
    out << "base " << format_point(x) << " level " << num(t.level) << "\n";
    out << "point " << format_point(q.x) << "\n";
    csv += ch.id + "," + sheet.label() + "," + num(t.level) + "," + std::to_string(t.side) + coord_fields(q.x) + "\n";
  } else {
    Trivialization t = cr.trivialize(x);
    out << "base " << format_point(t.base.x) << "\n";
    out << "level " << num(t.level) << "\n";
    out << "side " << (t.side > 0 ? "+" : "-") << "\n";
    csv += ch.id + "," + sheet.label() + "," + num(t.level) + "," + std::to_string(t.side) + coord_fields(t.base.x) + "\n";
  }
  if (!cfg.out.empty()) write_file(cfg.out, csv);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Retraction of a degenerating family onto its central fibre", "nc-retract"};
  app.require_subcommand(1);
  Config cfg;

  auto add_common = [&](CLI::App* s) {
    s->add_option("--model", cfg.model, "model file or catalog name");
    s->add_option("--at", cfg.at, "CHART:coords or a special point name");
    s->add_option("--point", cfg.point, "chart:ID;x=a,b[;s=+-], ID:a,b, ambient:a,b or a special point");
    s->add_option("-c,--level", cfg.level, "level c");
    s->add_option("--exponents", cfg.exponents, "comma separated exponents");
    s->add_option("--seed", cfg.seed, "random seed");
    s->add_option("--samples", cfg.samples, "sample count");
    s->add_option("--tol", cfg.tol, "ODE local error tolerance")->check(CLI::PositiveNumber);
    s->add_flag("--numeric", cfg.numeric, "force the numeric vector field");
    s->add_flag("--real", cfg.real, "real fibre instead of complex");
    s->add_option("--out", cfg.out, "CSV or JSON output path");
    s->add_option("--trace", cfg.trace, "trace CSV path (flow)");
  };

  using Handler = int (*)(const Config&, std::ostream&);
  const std::vector<std::tuple<std::string, std::string, Handler>> subs = {
      {"describe", "summarize a model", cmd_describe},
      {"stratify", "canonical stratification", cmd_stratify},
      {"cut", "fibre of the cut covering over a point", cmd_cut},
      {"retract", "retract a point onto the central fibre", cmd_retract},
      {"flow", "integrate the retraction flow", cmd_flow},
      {"fibre", "specialization fibre over a point", cmd_fibre},
      {"milnor", "Milnor fibre invariants", cmd_milnor},
      {"alpha-fibre", "angle level sets of a torus", cmd_alpha_fibre},
      {"check", "full invariant suite", cmd_check},
      {"trivialize", "collar trivialization of a point", cmd_trivialize},
  };
  std::vector<std::pair<CLI::App*, Handler>> handlers;
  for (const auto& [name, desc, fn] : subs) {
    CLI::App* s = app.add_subcommand(name, desc);
    add_common(s);
    handlers.emplace_back(s, fn);
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "nc-retract: " << e.what() << "\n";
    return kUsage;
  }

  try {
    for (const auto& [s, fn] : handlers)
      if (s->parsed()) return fn(cfg, out);
  } catch (const IoError& e) {
    err << "nc-retract: " << e.what() << "\n";
    return kIo;
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    err << "nc-retract: " << what << "\n";
    return what.rfind("cannot open", 0) == 0 ? kIo : kUsage;
  } catch (const SchemaError& e) {
    err << "nc-retract: " << e.what() << "\n";
    return kModel;
  } catch (const ModelError& e) {
    err << "nc-retract: " << e.what() << "\n";
    return kModel;
  } catch (const Error& e) {
    err << "nc-retract: " << e.what() << "\n";
    return kDomain;
  } catch (const std::out_of_range& e) {
    err << "nc-retract: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace ncr::cli
