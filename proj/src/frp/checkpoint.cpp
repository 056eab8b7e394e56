#include "frp/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "frp/errors.hpp"
#include "frp/text.hpp"

namespace frp {

namespace {

constexpr const char* kMagic = "frp-checkpoint";
constexpr int kFormatVersion = 1;

void write_matrix(std::string& out, const char* tag, const Matrix& m) {
  out += tag;
  out += ' ' + std::to_string(m.rows()) + ' ' + std::to_string(m.cols()) + '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ' ';
      out += format_double(row[j]);
    }
    out += '\n';
  }
}

void write_vector(std::string& out, const char* tag, const std::vector<double>& v) {
  out += tag;
  out += ' ' + std::to_string(v.size()) + '\n';
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (j) out += ' ';
    out += format_double(v[j]);
  }
  out += '\n';
}

class Tokens {
 public:
  explicit Tokens(const std::string& text) {
    std::size_t line = 1, i = 0;
    while (i < text.size()) {
      const char c = text[i];
      if (c == '\n') {
        ++line;
        ++i;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        ++i;
      } else {
        const std::size_t start = i;
        while (i < text.size() && text[i] != ' ' && text[i] != '\n' && text[i] != '\t' &&
               text[i] != '\r')
          ++i;
        items_.push_back({std::string_view(text).substr(start, i - start), line});
      }
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    const std::size_t line = pos_ < items_.size() ? items_[pos_].line
                             : items_.empty()     ? 1
                                                  : items_.back().line;
    throw FormatError("checkpoint line " + std::to_string(line) + ": " + what);
  }

  std::string_view next(const char* what) {
    if (pos_ >= items_.size()) fail(std::string("unexpected end of file, expected ") + what);
    return items_[pos_++].text;
  }

  void expect(std::string_view word) {
    const std::string_view got = next(std::string(word).c_str());
    if (got != word) {
      --pos_;
      fail("expected '" + std::string(word) + "', found '" + std::string(got) + "'");
    }
  }

  std::string_view peek() const { return pos_ < items_.size() ? items_[pos_].text : ""; }

  std::uint64_t count(const char* what) {
    const auto s = next(what);
    const auto v = parse_integer<std::uint64_t>(s);
    if (!v) {
      --pos_;
      fail(std::string("expected an integer ") + what + ", found '" + std::string(s) + "'");
    }
    return *v;
  }

  double real(const char* what) {
    const auto s = next(what);
    const auto v = parse_double(s);
    if (!v) {
      --pos_;
      fail(std::string("expected a number for ") + what + ", found '" + std::string(s) + "'");
    }
    return *v;
  }

  Matrix matrix(const char* tag) {
    expect(tag);
    const std::size_t r = count("rows"), c = count("cols");
    if (r == 0 || c == 0) fail(std::string(tag) + " has a zero dimension");
    Matrix m(r, c);
    for (double& v : m.data()) v = real(tag);
    return m;
  }

  std::vector<double> vector(const char* tag) {
    expect(tag);
    const std::size_t n = count("length");
    std::vector<double> v(n);
    for (double& x : v) x = real(tag);
    return v;
  }

  bool done() const { return pos_ >= items_.size(); }

 private:
  struct Item {
    std::string_view text;
    std::size_t line;
  };
  std::vector<Item> items_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Network& net) {
  const NetworkSpec& s = net.spec();
  std::string out;
  out += std::string(kMagic) + ' ' + std::to_string(kFormatVersion) + '\n';
  out += "input_dim " + std::to_string(s.input_dim) + '\n';
  out += "hidden_widths " + std::to_string(s.hidden_widths.size());
  for (auto w : s.hidden_widths) out += ' ' + std::to_string(w);
  out += '\n';
  out += "output_dim " + std::to_string(s.output_dim) + '\n';
  out += "activation " + s.activation.name() + ' ' + format_double(s.activation.omega0) + ' ' +
         format_double(s.activation.spread) + '\n';
  if (s.encoding) {
    out += "encoding " + std::to_string(s.encoding->levels) + ' ' +
           (s.encoding->include_input ? "1" : "0") + '\n';
  } else {
    out += "encoding none\n";
  }
  out += "reparam " + to_string(s.reparam.mode) + ' ' + std::to_string(s.reparam.frequencies) +
         ' ' + std::to_string(s.reparam.phases) + ' ' + format_double(s.reparam.interval_scale) +
         ' ' + std::to_string(s.reparam.layers.size());
  for (auto l : s.reparam.layers) out += ' ' + std::to_string(l);
  out += '\n';

  for (std::size_t n = 0; n < net.layers().size(); ++n) {
    const LayerParams& l = net.layers()[n];
    out += "layer " + std::to_string(n) + '\n';
    if (!l.reparam) {
      write_matrix(out, "weight", l.weight);
    } else {
      const ReparamState& r = *l.reparam;
      write_matrix(out, "coefficients", r.coefficients);
      const BasisProvenance& prov = r.basis->provenance();
      if (const auto* f = std::get_if<FourierBasisSpec>(&prov)) {
        out += "basis fourier " + std::to_string(f->frequencies) + ' ' +
               std::to_string(f->phases) + ' ' + std::to_string(f->input_dim) + ' ' +
               format_double(f->interval_scale) + '\n';
      } else if (const auto* rs = std::get_if<RandomBasisSpec>(&prov)) {
        out += "basis random " + std::to_string(rs->seed) + '\n';
        write_matrix(out, "values", r.basis->values());
      } else {
        out += "basis explicit\n";
        write_matrix(out, "values", r.basis->values());
      }
      if (r.basis_is_trainable()) write_matrix(out, "trainable_basis", r.trainable_basis);
    }
    write_vector(out, "bias", l.bias);
  }
  out += "end\n";
  return out;
}

Network parse_checkpoint(const std::string& text) {
  Tokens t(text);
  t.expect(kMagic);
  const auto version = t.count("format version");
  if (version != kFormatVersion) {
    t.fail("unsupported checkpoint format version " + std::to_string(version));
  }
  NetworkSpec s;
  t.expect("input_dim");
  s.input_dim = t.count("input_dim");
  t.expect("hidden_widths");
  const std::size_t h = t.count("hidden layer count");
  for (std::size_t i = 0; i < h; ++i) s.hidden_widths.push_back(t.count("width"));
  t.expect("output_dim");
  s.output_dim = t.count("output_dim");
  t.expect("activation");
  try {
    s.activation.type = parse_activation_type(std::string(t.next("activation")));
  } catch (const ValidationError& e) {
    t.fail(e.what());
  }
  s.activation.omega0 = t.real("omega0");
  s.activation.spread = t.real("spread");
  t.expect("encoding");
  if (t.peek() == "none") {
    t.next("encoding");
  } else {
    PositionalEncodingSpec pe;
    pe.levels = t.count("encoding levels");
    pe.include_input = t.count("include_input") != 0;
    s.encoding = pe;
  }
  t.expect("reparam");
  try {
    s.reparam.mode = parse_reparam_mode(std::string(t.next("reparam mode")));
  } catch (const ValidationError& e) {
    t.fail(e.what());
  }
  s.reparam.frequencies = t.count("frequencies");
  s.reparam.phases = t.count("phases");
  s.reparam.interval_scale = t.real("interval_scale");
  const std::size_t nl = t.count("reparam layer count");
  for (std::size_t i = 0; i < nl; ++i) s.reparam.layers.push_back(t.count("reparam layer"));
  try {
    s.validate();
  } catch (const Error& e) {
    t.fail(std::string("invalid network spec: ") + e.what());
  }

  const auto reparam_idx = s.reparam_layer_indices();
  std::map<std::size_t, std::shared_ptr<const BasisMatrix>> fourier_cache;
  std::vector<LayerParams> layers;
  for (std::size_t n = 0; n < s.layer_count(); ++n) {
    t.expect("layer");
    if (t.count("layer index") != n) t.fail("layers out of order");
    LayerParams l;
    const bool reparam = std::find(reparam_idx.begin(), reparam_idx.end(), n) != reparam_idx.end();
    if (!reparam) {
      l.weight = t.matrix("weight");
    } else {
      ReparamState r;
      r.mode = s.reparam.mode;
      r.coefficients = t.matrix("coefficients");
      t.expect("basis");
      const auto kind = t.next("basis kind");
      try {
        if (kind == "fourier") {
          FourierBasisSpec f;
          f.frequencies = t.count("F");
          f.phases = t.count("P");
          f.input_dim = t.count("basis input_dim");
          f.interval_scale = t.real("interval_scale");
          auto& cached = fourier_cache[f.input_dim];
          if (!cached || !(std::get<FourierBasisSpec>(cached->provenance()) == f)) {
            cached = std::make_shared<const BasisMatrix>(build_fourier_basis(f));
          }
          r.basis = cached;
        } else if (kind == "random") {
          const std::uint64_t seed = t.count("seed");
          Matrix values = t.matrix("values");
          const RandomBasisSpec rs{values.rows(), values.cols(), seed};
          r.basis = std::make_shared<const BasisMatrix>(
              BasisMatrix::restored(std::move(values), rs));
        } else if (kind == "explicit") {
          r.basis = std::make_shared<const BasisMatrix>(
              BasisMatrix::explicit_values(t.matrix("values")));
        } else {
          t.fail("unknown basis kind '" + std::string(kind) + "'");
        }
      } catch (const FormatError&) {
        throw;
      } catch (const Error& e) {
        t.fail(e.what());
      }
      if (r.basis_is_trainable()) r.trainable_basis = t.matrix("trainable_basis");
      try {
        r.validate();
        l.weight = compose_weights(r);
      } catch (const Error& e) {
        t.fail(e.what());
      }
      l.reparam = std::move(r);
    }
    l.bias = t.vector("bias");
    layers.push_back(std::move(l));
  }
  t.expect("end");
  if (!t.done()) t.fail("trailing content after 'end'");

  try {
    Network net(std::move(s), std::move(layers));
    return net;
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  const std::string text = serialize_checkpoint(net);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_checkpoint(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace frp
