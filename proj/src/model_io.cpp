#include "ncr/model_io.hpp"

#include <cctype>
#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ncr/errors.hpp"

namespace ncr {

namespace detail {
const std::map<std::string, std::string>& catalog_files();
}

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

// Minimal scanner that walks a JSON text tracking the pointer of each value.
class LineLocator {
 public:
  LineLocator(std::string_view text, std::string_view target) : text_(text), target_(target) {}

  int run() {
    try {
      value("");
    } catch (...) {
    }
    return found_;
  }

 private:
  void ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  std::string string() {
    std::string out;
    ++pos_;  // opening quote
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') {
        ++pos_;
        if (pos_ < text_.size() && text_[pos_] == 'u') {
          out += '?';
          pos_ += 5;
          continue;
        }
      }
      out += text_[pos_++];
    }
    ++pos_;
    return out;
  }

  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~')
        out += "~0";
      else if (c == '/')
        out += "~1";
      else
        out += c;
    }
    return out;
  }

  void value(const std::string& path) {
    ws();
    if (found_ == 0 && path == target_) found_ = line_;
    if (pos_ >= text_.size()) throw 0;
    char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      ws();
      if (text_[pos_] == '}') {
        ++pos_;
        return;
      }
      for (;;) {
        ws();
        std::string key = string();
        ws();
        ++pos_;  // ':'
        value(path + "/" + escape(key));
        ws();
        if (text_[pos_++] == '}') return;
      }
    } else if (c == '[') {
      ++pos_;
      ws();
      if (text_[pos_] == ']') {
        ++pos_;
        return;
      }
      for (int i = 0;; ++i) {
        value(path + "/" + std::to_string(i));
        ws();
        if (text_[pos_++] == ']') return;
      }
    } else if (c == '"') {
      string();
    } else {
      while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '}' && text_[pos_] != ']' &&
             !std::isspace(static_cast<unsigned char>(text_[pos_])))
        ++pos_;
    }
  }

  std::string_view text_;
  std::string_view target_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int found_ = 0;
};

class Reader {
 public:
  explicit Reader(std::string_view doc) : doc_(doc) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& msg) const {
    throw SchemaError(msg + " (at " + (pointer.empty() ? "/" : pointer) + ")", locate_line(doc_, pointer),
                      pointer);
  }

  void only_keys(const json& obj, const std::string& ptr, std::set<std::string> allowed) const {
    if (!obj.is_object()) fail(ptr, "expected an object");
    for (const auto& [key, _] : obj.items())
      if (!allowed.count(key)) fail(ptr + "/" + key, "unknown field '" + key + "'");
  }

  const json& need(const json& obj, const std::string& ptr, const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end()) fail(ptr, std::string("missing field '") + key + "'");
    return *it;
  }

  std::string str(const json& v, const std::string& ptr) const {
    if (!v.is_string()) fail(ptr, "expected a string");
    return v.get<std::string>();
  }

  double num(const json& v, const std::string& ptr) const {
    if (!v.is_number()) fail(ptr, "expected a number");
    return v.get<double>();
  }

  int integer(const json& v, const std::string& ptr) const {
    if (!v.is_number_integer()) fail(ptr, "expected an integer");
    return v.get<int>();
  }

  Expr expr(const json& v, const std::string& ptr) const {
    std::string text = str(v, ptr);
    try {
      return Expr::parse(text);
    } catch (const SchemaError& e) {
      fail(ptr, e.what());
    }
  }

  Point point(const json& v, const std::string& ptr) const {
    if (!v.is_array()) fail(ptr, "expected an array of numbers");
    Point p;
    for (std::size_t i = 0; i < v.size(); ++i) p.push_back(num(v[i], ptr + "/" + std::to_string(i)));
    return p;
  }

  ChartSpec chart(const json& c, const std::string& ptr) const {
    only_keys(c, ptr, {"id", "field_kind", "dim", "exponents", "unit_factor", "domain_radius", "divisor_labels"});
    ChartSpec ch;
    ch.id = str(need(c, ptr, "id"), ptr + "/id");
    std::string kind = str(need(c, ptr, "field_kind"), ptr + "/field_kind");
    if (kind == "real")
      ch.field = FieldKind::Real;
    else if (kind == "complex")
      ch.field = FieldKind::Complex;
    else
      fail(ptr + "/field_kind", "unknown field_kind '" + kind + "'");
    ch.dim = integer(need(c, ptr, "dim"), ptr + "/dim");
    if (ch.dim < 1) fail(ptr + "/dim", "dimension must be positive");
    const json& ex = need(c, ptr, "exponents");
    if (!ex.is_array() || static_cast<int>(ex.size()) != ch.dim)
      fail(ptr + "/exponents", "expected " + std::to_string(ch.dim) + " exponents");
    for (int i = 0; i < ch.dim; ++i) {
      std::string p = ptr + "/exponents/" + std::to_string(i);
      int a = integer(ex[i], p);
      if (a < 0) fail(p, "negative exponent");
      ch.exponents.push_back(a);
    }
    ch.unit_factor = expr(need(c, ptr, "unit_factor"), ptr + "/unit_factor");
    if (!ch.unit_factor.is_polynomial()) fail(ptr + "/unit_factor", "unit factor must be a polynomial");
    if (ch.unit_factor.max_var() >= ch.dim) fail(ptr + "/unit_factor", "unit factor uses a coordinate beyond dim");
    ch.domain_radius = num(need(c, ptr, "domain_radius"), ptr + "/domain_radius");
    if (!(ch.domain_radius > 0)) fail(ptr + "/domain_radius", "domain radius must be positive");
    const json& labels = need(c, ptr, "divisor_labels");
    if (!labels.is_object()) fail(ptr + "/divisor_labels", "expected an object");
    for (const auto& [name, comp] : labels.items()) {
      std::string p = ptr + "/divisor_labels/" + name;
      if (name.size() < 2 || (name[0] != 'x' && name[0] != 'z') ||
          !std::all_of(name.begin() + 1, name.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }))
        fail(p, "divisor label key must be a coordinate name like x1");
      int i = std::stoi(name.substr(1)) - 1;
      if (i < 0 || i >= ch.dim) fail(p, "coordinate out of range");
      if (ch.exponents[i] == 0) fail(p, "divisor label on a coordinate with exponent 0");
      ch.divisor_labels[i] = str(comp, p);
    }
    for (int i = 0; i < ch.dim; ++i)
      if (ch.exponents[i] > 0 && !ch.divisor_labels.count(i))
        fail(ptr + "/divisor_labels", "missing divisor label for positive exponent at coordinate " +
                                          std::to_string(i + 1));
    return ch;
  }

  NCModel model() const {
    json root;
    try {
      root = json::parse(doc_);
    } catch (const json::parse_error& e) {
      int line = 1;
      for (std::size_t i = 0; i < e.byte && i < doc_.size(); ++i)
        if (doc_[i] == '\n') ++line;
      throw SchemaError(std::string("malformed document: ") + e.what(), line);
    }
    only_keys(root, "", {"name", "sign_mode", "level_bound", "components", "charts", "transitions",
                         "modification", "special_points", "stratifications"});
    NCModel m;
    m.name = str(need(root, "", "name"), "/name");
    std::string mode = str(need(root, "", "sign_mode"), "/sign_mode");
    if (mode == "nonnegative")
      m.sign_mode = SignMode::Nonnegative;
    else if (mode == "general")
      m.sign_mode = SignMode::General;
    else
      fail("/sign_mode", "unknown sign_mode '" + mode + "'");
    m.level_bound = num(need(root, "", "level_bound"), "/level_bound");
    if (!(m.level_bound > 0)) fail("/level_bound", "level bound must be positive");

    const json& comps = need(root, "", "components");
    if (!comps.is_array()) fail("/components", "expected an array");
    for (std::size_t i = 0; i < comps.size(); ++i) {
      std::string p = "/components/" + std::to_string(i);
      only_keys(comps[i], p, {"id", "multiplicity", "connected"});
      DivisorComponent dc;
      dc.id = str(need(comps[i], p, "id"), p + "/id");
      dc.multiplicity = integer(need(comps[i], p, "multiplicity"), p + "/multiplicity");
      if (dc.multiplicity < 1) fail(p + "/multiplicity", "multiplicity must be positive");
      if (comps[i].contains("connected")) {
        if (!comps[i]["connected"].is_boolean()) fail(p + "/connected", "expected a boolean");
        dc.connected = comps[i]["connected"].get<bool>();
      }
      m.components.push_back(dc);
    }

    const json& charts = need(root, "", "charts");
    if (!charts.is_array() || charts.empty()) fail("/charts", "expected a nonempty array");
    for (std::size_t i = 0; i < charts.size(); ++i)
      m.charts.push_back(chart(charts[i], "/charts/" + std::to_string(i)));

    if (root.contains("transitions")) {
      const json& ts = root["transitions"];
      if (!ts.is_array()) fail("/transitions", "expected an array");
      for (std::size_t i = 0; i < ts.size(); ++i) {
        std::string p = "/transitions/" + std::to_string(i);
        only_keys(ts[i], p, {"id", "source", "target", "inverse", "map", "overlap", "sign_data"});
        Transition t;
        t.id = str(need(ts[i], p, "id"), p + "/id");
        t.source = str(need(ts[i], p, "source"), p + "/source");
        t.target = str(need(ts[i], p, "target"), p + "/target");
        t.inverse = str(need(ts[i], p, "inverse"), p + "/inverse");
        const json& mp = need(ts[i], p, "map");
        if (!mp.is_array()) fail(p + "/map", "expected an array");
        for (std::size_t j = 0; j < mp.size(); ++j) t.map.push_back(expr(mp[j], p + "/map/" + std::to_string(j)));
        if (ts[i].contains("overlap")) {
          const json& ov = ts[i]["overlap"];
          if (!ov.is_array()) fail(p + "/overlap", "expected an array");
          for (std::size_t j = 0; j < ov.size(); ++j)
            t.overlap.push_back(expr(ov[j], p + "/overlap/" + std::to_string(j)));
        }
        const json& sd = need(ts[i], p, "sign_data");
        if (!sd.is_object()) fail(p + "/sign_data", "expected an object");
        for (const auto& [comp, s] : sd.items()) {
          int v = integer(s, p + "/sign_data/" + comp);
          if (v != 1 && v != -1) fail(p + "/sign_data/" + comp, "sign must be +1 or -1");
          t.sign_data[comp] = v;
        }
        m.transitions.push_back(std::move(t));
      }
    }

    if (root.contains("modification")) {
      const json& md = root["modification"];
      only_keys(md, "/modification", {"ambient_dim", "ambient_f", "sigma"});
      Modification mod;
      mod.ambient_dim = integer(need(md, "/modification", "ambient_dim"), "/modification/ambient_dim");
      mod.ambient_f = expr(need(md, "/modification", "ambient_f"), "/modification/ambient_f");
      const json& sg = need(md, "/modification", "sigma");
      if (!sg.is_object()) fail("/modification/sigma", "expected an object");
      for (const auto& [cid, arr] : sg.items()) {
        std::string p = "/modification/sigma/" + cid;
        if (!arr.is_array() || static_cast<int>(arr.size()) != mod.ambient_dim)
          fail(p, "expected " + std::to_string(mod.ambient_dim) + " expressions");
        std::vector<Expr> exprs;
        for (std::size_t j = 0; j < arr.size(); ++j) exprs.push_back(expr(arr[j], p + "/" + std::to_string(j)));
        mod.sigma[cid] = std::move(exprs);
      }
      m.modification = std::move(mod);
    }

    if (root.contains("special_points")) {
      const json& sp = root["special_points"];
      if (!sp.is_array()) fail("/special_points", "expected an array");
      for (std::size_t i = 0; i < sp.size(); ++i) {
        std::string p = "/special_points/" + std::to_string(i);
        only_keys(sp[i], p, {"name", "chart", "coords", "ambient", "exceptional"});
        SpecialPoint s;
        s.name = str(need(sp[i], p, "name"), p + "/name");
        if (sp[i].contains("chart")) s.chart = str(sp[i]["chart"], p + "/chart");
        if (sp[i].contains("coords")) s.coords = point(sp[i]["coords"], p + "/coords");
        if (sp[i].contains("ambient")) s.ambient = point(sp[i]["ambient"], p + "/ambient");
        if (sp[i].contains("exceptional")) {
          const json& ex = sp[i]["exceptional"];
          if (!ex.is_array()) fail(p + "/exceptional", "expected an array");
          for (std::size_t j = 0; j < ex.size(); ++j) {
            std::string q = p + "/exceptional/" + std::to_string(j);
            only_keys(ex[j], q, {"components", "chi"});
            ExceptionalStratum es;
            const json& cs = need(ex[j], q, "components");
            if (!cs.is_array() || cs.empty()) fail(q + "/components", "expected a nonempty array");
            for (std::size_t k = 0; k < cs.size(); ++k)
              es.components.push_back(str(cs[k], q + "/components/" + std::to_string(k)));
            es.chi = integer(need(ex[j], q, "chi"), q + "/chi");
            s.exceptional.push_back(std::move(es));
          }
        }
        m.special_points.push_back(std::move(s));
      }
    }

    if (root.contains("stratifications")) {
      const json& st = root["stratifications"];
      if (!st.is_array()) fail("/stratifications", "expected an array");
      for (std::size_t i = 0; i < st.size(); ++i) {
        std::string p = "/stratifications/" + std::to_string(i);
        only_keys(st[i], p, {"name", "expect_pass", "strata"});
        DeclaredStratification ds;
        ds.name = str(need(st[i], p, "name"), p + "/name");
        if (st[i].contains("expect_pass")) {
          if (!st[i]["expect_pass"].is_boolean()) fail(p + "/expect_pass", "expected a boolean");
          ds.expect_pass = st[i]["expect_pass"].get<bool>();
        }
        const json& ss = need(st[i], p, "strata");
        if (!ss.is_array()) fail(p + "/strata", "expected an array");
        for (std::size_t j = 0; j < ss.size(); ++j) {
          std::string q = p + "/strata/" + std::to_string(j);
          only_keys(ss[j], q, {"label", "dim", "points"});
          DeclaredStratum d;
          d.label = str(need(ss[j], q, "label"), q + "/label");
          d.dim = integer(need(ss[j], q, "dim"), q + "/dim");
          if (ss[j].contains("points")) {
            const json& pts = ss[j]["points"];
            if (!pts.is_array()) fail(q + "/points", "expected an array");
            for (std::size_t k = 0; k < pts.size(); ++k)
              d.points.push_back(point(pts[k], q + "/points/" + std::to_string(k)));
          }
          ds.strata.push_back(std::move(d));
        }
        m.stratifications.push_back(std::move(ds));
      }
    }
    return m;
  }

 private:
  std::string_view doc_;
};

std::string label_key(const ChartSpec& c, int i) { return std::string(1, c.var_prefix()) + std::to_string(i + 1); }

}  // namespace

int locate_line(std::string_view document, std::string_view pointer) {
  return LineLocator(document, pointer).run();
}

NCModel load_model(std::string_view document) { return Reader(document).model(); }

NCModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_model(ss.str());
}

std::string save_model(const NCModel& m) {
  ordered_json root;
  root["name"] = m.name;
  root["sign_mode"] = m.sign_mode == SignMode::Nonnegative ? "nonnegative" : "general";
  root["level_bound"] = m.level_bound;
  root["components"] = ordered_json::array();
  for (const auto& c : m.components) {
    ordered_json j;
    j["id"] = c.id;
    j["multiplicity"] = c.multiplicity;
    j["connected"] = c.connected;
    root["components"].push_back(j);
  }
  root["charts"] = ordered_json::array();
  for (const auto& c : m.charts) {
    ordered_json j;
    j["id"] = c.id;
    j["field_kind"] = c.field == FieldKind::Complex ? "complex" : "real";
    j["dim"] = c.dim;
    j["exponents"] = c.exponents;
    j["unit_factor"] = c.unit_factor.str(c.var_prefix());
    j["domain_radius"] = c.domain_radius;
    ordered_json labels = ordered_json::object();
    for (const auto& [i, comp] : c.divisor_labels) labels[label_key(c, i)] = comp;
    j["divisor_labels"] = labels;
    root["charts"].push_back(j);
  }
  if (!m.transitions.empty()) {
    root["transitions"] = ordered_json::array();
    for (const auto& t : m.transitions) {
      char prefix = m.chart(t.source).var_prefix();
      ordered_json j;
      j["id"] = t.id;
      j["source"] = t.source;
      j["target"] = t.target;
      j["inverse"] = t.inverse;
      j["map"] = ordered_json::array();
      for (const auto& e : t.map) j["map"].push_back(e.str(prefix));
      j["overlap"] = ordered_json::array();
      for (const auto& e : t.overlap) j["overlap"].push_back(e.str(prefix));
      ordered_json sd = ordered_json::object();
      for (const auto& [comp, s] : t.sign_data) sd[comp] = s;
      j["sign_data"] = sd;
      root["transitions"].push_back(j);
    }
  }
  if (m.modification) {
    ordered_json j;
    j["ambient_dim"] = m.modification->ambient_dim;
    j["ambient_f"] = m.modification->ambient_f.str();
    ordered_json sg = ordered_json::object();
    for (const auto& c : m.charts) {
      auto it = m.modification->sigma.find(c.id);
      if (it == m.modification->sigma.end()) continue;
      ordered_json arr = ordered_json::array();
      for (const auto& e : it->second) arr.push_back(e.str(c.var_prefix()));
      sg[c.id] = arr;
    }
    j["sigma"] = sg;
    root["modification"] = j;
  }
  if (!m.special_points.empty()) {
    root["special_points"] = ordered_json::array();
    for (const auto& s : m.special_points) {
      ordered_json j;
      j["name"] = s.name;
      if (!s.chart.empty()) j["chart"] = s.chart;
      if (!s.coords.empty()) j["coords"] = s.coords;
      if (!s.ambient.empty()) j["ambient"] = s.ambient;
      if (!s.exceptional.empty()) {
        j["exceptional"] = ordered_json::array();
        for (const auto& e : s.exceptional) {
          ordered_json ej;
          ej["components"] = e.components;
          ej["chi"] = e.chi;
          j["exceptional"].push_back(ej);
        }
      }
      root["special_points"].push_back(j);
    }
  }
  if (!m.stratifications.empty()) {
    root["stratifications"] = ordered_json::array();
    for (const auto& s : m.stratifications) {
      ordered_json j;
      j["name"] = s.name;
      j["expect_pass"] = s.expect_pass;
      j["strata"] = ordered_json::array();
      for (const auto& d : s.strata) {
        ordered_json dj;
        dj["label"] = d.label;
        dj["dim"] = d.dim;
        if (!d.points.empty()) dj["points"] = d.points;
        j["strata"].push_back(dj);
      }
      root["stratifications"].push_back(j);
    }
  }
  return root.dump(2) + "\n";
}

std::vector<std::string> catalog_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : detail::catalog_files()) out.push_back(name);
  return out;
}

std::string catalog_document(const std::string& name) {
  const auto& files = detail::catalog_files();
  auto it = files.find(name);
  if (it == files.end()) throw ConfigError("no catalog model named '" + name + "'");
  return it->second;
}

NCModel catalog_model(const std::string& name) { return load_model(catalog_document(name)); }

}  // namespace ncr
