#include "frp/config.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "frp/errors.hpp"
#include "frp/text.hpp"

namespace frp {

namespace {

enum class ValueKind { String, Number, Bool, Array };

struct Value {
  ValueKind kind = ValueKind::String;
  std::string text;                ///< string contents, number token, or true/false
  std::vector<std::string> items;  ///< array elements (number tokens)
  std::size_t line = 0;
};

struct Entry {
  Value value;
  bool used = false;
};

using Section = std::map<std::string, Entry>;

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

bool is_number_token(std::string_view s) { return parse_double(s).has_value() && s != "nan"; }

[[noreturn]] void syntax_error(std::size_t line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

Value parse_value(std::string_view raw, std::size_t line) {
  const std::string s = trim(raw);
  Value v;
  v.line = line;
  if (s.empty()) syntax_error(line, "missing value");
  if (s.front() == '"') {
    std::string out;
    std::size_t i = 1;
    for (; i < s.size() && s[i] != '"'; ++i) {
      if (s[i] == '\\') {
        if (i + 1 >= s.size()) break;
        const char esc = s[++i];
        if (esc != '"' && esc != '\\') syntax_error(line, "unsupported escape in string");
        out += esc;
      } else {
        out += s[i];
      }
    }
    if (i >= s.size()) syntax_error(line, "unterminated string");
    if (i + 1 != s.size()) syntax_error(line, "unexpected text after string");
    v.kind = ValueKind::String;
    v.text = std::move(out);
    return v;
  }
  if (s.front() == '[') {
    if (s.back() != ']') syntax_error(line, "unterminated array");
    v.kind = ValueKind::Array;
    const std::string inner = trim(std::string_view(s).substr(1, s.size() - 2));
    if (inner.empty()) return v;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = inner.find(',', start);
      const std::string item =
          trim(std::string_view(inner).substr(start, comma == std::string::npos ? std::string::npos
                                                                                 : comma - start));
      if (!is_number_token(item)) syntax_error(line, "array elements must be numbers");
      v.items.push_back(item);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return v;
  }
  if (s == "true" || s == "false") {
    v.kind = ValueKind::Bool;
    v.text = s;
    return v;
  }
  if (is_number_token(s)) {
    v.kind = ValueKind::Number;
    v.text = s;
    return v;
  }
  syntax_error(line, "cannot parse value '" + s + "' (strings need double quotes)");
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && in_string) {
      ++i;
    } else if (line[i] == '"') {
      in_string = !in_string;
    } else if (line[i] == '#' && !in_string) {
      return line.substr(0, i);
    }
  }
  return line;
}

class Document {
 public:
  explicit Document(const std::string& text) {
    std::istringstream in(text);
    std::string raw;
    std::size_t line = 0;
    std::string current;
    while (std::getline(in, raw)) {
      ++line;
      const std::string s = trim(strip_comment(raw));
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') syntax_error(line, "malformed section header");
        current = trim(std::string_view(s).substr(1, s.size() - 2));
        if (!is_identifier(current)) syntax_error(line, "invalid section name '" + current + "'");
        if (!section_lines_.emplace(current, line).second) {
          syntax_error(line, "duplicate section [" + current + "]");
        }
        sections_[current];
        continue;
      }
      const std::size_t eq = s.find('=');
      if (eq == std::string::npos) syntax_error(line, "expected 'key = value'");
      const std::string key = trim(std::string_view(s).substr(0, eq));
      if (!is_identifier(key)) syntax_error(line, "invalid key '" + key + "'");
      if (current.empty()) syntax_error(line, "key '" + key + "' appears before any [section]");
      Value v = parse_value(std::string_view(s).substr(eq + 1), line);
      auto [it, inserted] = sections_[current].emplace(key, Entry{std::move(v)});
      if (!inserted) syntax_error(line, "duplicate key '" + current + "." + key + "'");
    }
  }

  bool has_section(const std::string& name) const { return sections_.count(name) != 0; }

  const Value* find(const std::string& section, const std::string& key) {
    auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    auto e = s->second.find(key);
    if (e == s->second.end()) return nullptr;
    e->second.used = true;
    return &e->second.value;
  }

  bool present(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) != 0;
  }

  void reject_leftovers(const std::set<std::string>& known_sections) const {
    for (const auto& [name, section] : sections_) {
      for (const auto& [key, entry] : section) {
        if (!entry.used) {
          syntax_error(entry.value.line, "unknown key '" + name + "." + key + "'");
        }
      }
      if (section.empty() && !known_sections.count(name)) {
        syntax_error(section_lines_.at(name), "unknown section [" + name + "]");
      }
    }
  }

 private:
  std::map<std::string, Section> sections_;
  std::map<std::string, std::size_t> section_lines_;
};

[[noreturn]] void type_error(const Value& v, const std::string& path, const char* expected) {
  syntax_error(v.line, "'" + path + "' expects " + expected);
}

struct Reader {
  Document& doc;
  std::string section;

  std::string path(const std::string& key) const { return section + "." + key; }

  void string(const std::string& key, std::string& out) {
    if (const Value* v = doc.find(section, key)) {
      if (v->kind != ValueKind::String) type_error(*v, path(key), "a quoted string");
      out = v->text;
    }
  }
  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (const Value* v = doc.find(section, key)) {
      std::optional<Int> parsed;
      if (v->kind == ValueKind::Number) parsed = parse_integer<Int>(v->text);
      if (!parsed) type_error(*v, path(key), "a non-negative integer");
      out = *parsed;
    }
  }
  void real(const std::string& key, double& out) {
    if (const Value* v = doc.find(section, key)) {
      if (v->kind != ValueKind::Number) type_error(*v, path(key), "a number");
      out = *parse_double(v->text);
    }
  }
  void real(const std::string& key, std::optional<double>& out) {
    if (doc.present(section, key)) {
      double d = 0.0;
      real(key, d);
      out = d;
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const Value* v = doc.find(section, key)) {
      if (v->kind != ValueKind::Bool) type_error(*v, path(key), "true or false");
      out = v->text == "true";
    }
  }
  void count_list(const std::string& key, std::vector<std::size_t>& out) {
    if (const Value* v = doc.find(section, key)) {
      if (v->kind != ValueKind::Array) type_error(*v, path(key), "an array of integers");
      out.clear();
      for (const auto& item : v->items) {
        const auto parsed = parse_integer<std::size_t>(item);
        if (!parsed) type_error(*v, path(key), "an array of non-negative integers");
        out.push_back(*parsed);
      }
    }
  }
  const Value* raw(const std::string& key) { return doc.find(section, key); }
};

std::string task_kind_name(TaskKind k) { return k == TaskKind::Function1D ? "function1d" : "image2d"; }

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string count_list_text(const std::vector<std::size_t>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(v[i]);
  }
  return out + "]";
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir) {
  Document doc(text);
  ExperimentConfig c;
  if (!doc.has_section("task")) throw ConfigError("config: missing required section [task]");

  Reader task{doc, "task"};
  const Value* kind = task.raw("kind");
  if (!kind) throw ConfigError("config: missing required key 'task.kind'");
  if (kind->kind != ValueKind::String) type_error(*kind, "task.kind", "a quoted string");
  if (kind->text == "function1d") {
    c.task.kind = TaskKind::Function1D;
  } else if (kind->text == "image2d") {
    c.task.kind = TaskKind::Image2D;
  } else {
    syntax_error(kind->line, "'task.kind' must be \"function1d\" or \"image2d\"");
  }
  task.integer("samples", c.task.samples);
  task.string("image", c.task.image);
  if (!c.task.image.empty() && !base_dir.empty() &&
      std::filesystem::path(c.task.image).is_relative()) {
    c.task.image = (base_dir / c.task.image).lexically_normal().string();
  }

  Reader net{doc, "network"};
  net.count_list("hidden", c.network.hidden);
  if (const Value* a = net.raw("activation")) {
    if (a->kind != ValueKind::String) type_error(*a, "network.activation", "a quoted string");
    try {
      c.network.activation = parse_activation_type(a->text);
    } catch (const ValidationError& e) {
      syntax_error(a->line, std::string("network.activation: ") + e.what());
    }
  }
  net.real("omega0", c.network.omega0);
  net.real("spread", c.network.spread);
  net.integer("encoding_levels", c.network.encoding_levels);
  net.boolean("encoding_include_input", c.network.encoding_include_input);

  Reader rep{doc, "reparam"};
  if (const Value* m = rep.raw("mode")) {
    if (m->kind != ValueKind::String) type_error(*m, "reparam.mode", "a quoted string");
    try {
      c.reparam.mode = parse_reparam_mode(m->text);
    } catch (const ValidationError& e) {
      syntax_error(m->line, std::string("reparam.mode: ") + e.what());
    }
  }
  rep.integer("F", c.reparam.frequencies);
  rep.integer("P", c.reparam.phases);
  rep.real("interval_scale", c.reparam.interval_scale);
  rep.count_list("layers", c.reparam.layers);

  Reader tr{doc, "training"};
  tr.integer("iterations", c.training.iterations);
  tr.real("beta1", c.training.beta1);
  tr.real("beta2", c.training.beta2);
  tr.real("epsilon", c.training.epsilon);
  tr.integer("seed", c.training.seed);
  std::string schedule = "constant";
  tr.string("schedule", schedule);
  std::set<std::string> schedule_keys;
  if (schedule == "constant") {
    ConstantLr s = std::get<ConstantLr>(TrainingConfig{}.schedule);
    tr.real("lr", s.lr);
    c.training.schedule = s;
    schedule_keys = {"lr"};
  } else if (schedule == "step_drop") {
    StepDropLr s;
    tr.real("lr0", s.lr0);
    tr.integer("drop_at", s.drop_at);
    tr.real("lr1", s.lr1);
    c.training.schedule = s;
    schedule_keys = {"lr0", "drop_at", "lr1"};
  } else if (schedule == "exp_decay") {
    ExpDecayLr s;
    tr.real("lr0", s.lr0);
    tr.real("lr_end", s.lr_end);
    tr.integer("total_iters", s.total_iters);
    c.training.schedule = s;
    schedule_keys = {"lr0", "lr_end", "total_iters"};
  } else {
    throw ConfigError("config: 'training.schedule' must be \"constant\", \"step_drop\" or \"exp_decay\"");
  }
  for (const char* key : {"lr", "lr0", "lr1", "drop_at", "lr_end", "total_iters"}) {
    if (doc.present("training", key) && !schedule_keys.count(key)) {
      throw ConfigError("config: 'training." + std::string(key) + "' is not used by schedule '" +
                        schedule + "'");
    }
  }

  Reader diag{doc, "diagnostics"};
  diag.integer("log_every", c.diagnostics.log_every);
  diag.integer("spectrum_every", c.diagnostics.spectrum_every);
  diag.integer("ntk_every", c.diagnostics.ntk_every);
  diag.integer("ntk_samples", c.diagnostics.ntk_samples);

  Reader out{doc, "output"};
  out.string("directory", c.output.directory);
  out.boolean("checkpoint", c.output.checkpoint);
  out.boolean("reconstruction", c.output.reconstruction);
  out.boolean("wall_time_in_loss_log", c.output.wall_time_in_loss_log);

  doc.reject_leftovers({"task", "network", "reparam", "training", "diagnostics", "output"});
  return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "[task]\n";
  o << "kind = " << quote(task_kind_name(c.task.kind)) << "\n";
  o << "samples = " << c.task.samples << "\n";
  o << "image = " << quote(c.task.image) << "\n";

  o << "\n[network]\n";
  o << "hidden = " << count_list_text(c.network.hidden) << "\n";
  o << "activation = " << quote(Activation{c.network.activation}.name()) << "\n";
  if (c.network.omega0) o << "omega0 = " << format_double(*c.network.omega0) << "\n";
  o << "spread = " << format_double(c.network.spread) << "\n";
  o << "encoding_levels = " << c.network.encoding_levels << "\n";
  o << "encoding_include_input = " << (c.network.encoding_include_input ? "true" : "false") << "\n";

  o << "\n[reparam]\n";
  o << "mode = " << quote(to_string(c.reparam.mode)) << "\n";
  o << "F = " << c.reparam.frequencies << "\n";
  o << "P = " << c.reparam.phases << "\n";
  o << "interval_scale = " << format_double(c.reparam.interval_scale) << "\n";
  o << "layers = " << count_list_text(c.reparam.layers) << "\n";

  o << "\n[training]\n";
  o << "iterations = " << c.training.iterations << "\n";
  if (const auto* s = std::get_if<ConstantLr>(&c.training.schedule)) {
    o << "schedule = \"constant\"\n";
    o << "lr = " << format_double(s->lr) << "\n";
  } else if (const auto* s = std::get_if<StepDropLr>(&c.training.schedule)) {
    o << "schedule = \"step_drop\"\n";
    o << "lr0 = " << format_double(s->lr0) << "\n";
    o << "drop_at = " << s->drop_at << "\n";
    o << "lr1 = " << format_double(s->lr1) << "\n";
  } else if (const auto* s = std::get_if<ExpDecayLr>(&c.training.schedule)) {
    o << "schedule = \"exp_decay\"\n";
    o << "lr0 = " << format_double(s->lr0) << "\n";
    o << "lr_end = " << format_double(s->lr_end) << "\n";
    o << "total_iters = " << s->total_iters << "\n";
  }
  o << "beta1 = " << format_double(c.training.beta1) << "\n";
  o << "beta2 = " << format_double(c.training.beta2) << "\n";
  o << "epsilon = " << format_double(c.training.epsilon) << "\n";
  o << "seed = " << c.training.seed << "\n";

  o << "\n[diagnostics]\n";
  o << "log_every = " << c.diagnostics.log_every << "\n";
  o << "spectrum_every = " << c.diagnostics.spectrum_every << "\n";
  o << "ntk_every = " << c.diagnostics.ntk_every << "\n";
  o << "ntk_samples = " << c.diagnostics.ntk_samples << "\n";

  o << "\n[output]\n";
  o << "directory = " << quote(c.output.directory) << "\n";
  o << "checkpoint = " << (c.output.checkpoint ? "true" : "false") << "\n";
  o << "reconstruction = " << (c.output.reconstruction ? "true" : "false") << "\n";
  o << "wall_time_in_loss_log = " << (c.output.wall_time_in_loss_log ? "true" : "false") << "\n";
  return o.str();
}

NetworkSpec ExperimentConfig::network_spec() const {
  NetworkSpec s;
  const bool image = task.kind == TaskKind::Image2D;
  s.input_dim = image ? 2 : 1;
  s.hidden_widths = network.hidden;
  s.output_dim = 1;
  s.activation.type = network.activation;
  s.activation.omega0 = network.omega0.value_or(image ? 30.0 : 5.0);
  s.activation.spread = network.spread;
  if (network.encoding_levels > 0) {
    s.encoding = PositionalEncodingSpec{network.encoding_levels, network.encoding_include_input};
  }
  s.reparam = reparam;
  return s;
}

AdamHyper ExperimentConfig::adam() const {
  return {lr_at(training.schedule, 0), training.beta1, training.beta2, training.epsilon};
}

void ExperimentConfig::validate() const {
  auto wrap = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("config [") + section + "]: " + e.what());
    }
  };
  if (task.kind == TaskKind::Function1D) {
    if (task.samples < 2) throw ConfigError("config: 'task.samples' must be >= 2");
    if (!task.image.empty()) throw ConfigError("config: 'task.image' is only used by image2d");
  } else {
    if (task.image.empty()) throw ConfigError("config: image2d needs 'task.image'");
    if (!std::filesystem::is_regular_file(task.image)) {
      throw ConfigError("config: 'task.image' file does not exist: " + task.image);
    }
    if (diagnostics.spectrum_every > 0) {
      throw ConfigError("config: 'diagnostics.spectrum_every' needs a function1d task");
    }
  }
  wrap("network", [&] { network_spec().validate(); });
  if (training.iterations < 1) throw ConfigError("config: 'training.iterations' must be >= 1");
  wrap("training", [&] {
    adam().validate();
    validate_schedule(training.schedule, training.iterations);
  });
  if (diagnostics.log_every < 1) throw ConfigError("config: 'diagnostics.log_every' must be >= 1");
  if (diagnostics.ntk_samples < 1) {
    throw ConfigError("config: 'diagnostics.ntk_samples' must be >= 1");
  }
  if (output.directory.empty()) throw ConfigError("config: 'output.directory' must be non-empty");
}

}  // namespace frp
