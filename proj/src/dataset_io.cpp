#include <fstream>
#include <sstream>

#include "stackrl/dataset_types.hpp"
#include "stackrl/detail/text_io.hpp"
#include "stackrl/errors.hpp"

namespace stackrl {

using detail::format_double;
using detail::parse_double;
using detail::parse_long;
using detail::split;

namespace {

int transition_columns(const OfflineDataset& d) {
  return 2 * d.state_dim + d.action_space.dim() + 2;  // s, a, r, s', done
}

}  // namespace

void save_dataset(const OfflineDataset& data, const std::string& path) {
  if (data.size() < 1) throw InputError("refusing to save an empty dataset");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");

  out << "env=" << data.env_kind << " state_dim=" << data.state_dim
      << " action_kind=" << (data.action_space.discrete() ? "discrete" : "box")
      << " action_dim="
      << (data.action_space.discrete() ? data.action_space.cardinality
                                       : data.action_space.dim())
      << " gamma=" << format_double(data.gamma) << " n=" << data.size()
      << " m_init=" << data.initial_states.size();
  if (!data.action_space.discrete()) {
    out << " action_lower=";
    for (int i = 0; i < data.action_space.dim(); ++i)
      out << (i ? "," : "") << format_double(data.action_space.lower[i]);
    out << " action_upper=";
    for (int i = 0; i < data.action_space.dim(); ++i)
      out << (i ? "," : "") << format_double(data.action_space.upper[i]);
  }
  for (const auto& [key, value] : data.meta) out << " " << key << "=" << value;
  out << "\n";

  for (const auto& t : data.transitions) {
    for (int i = 0; i < t.s.size(); ++i) out << format_double(t.s[i]) << ",";
    for (int i = 0; i < t.a.size(); ++i) out << format_double(t.a[i]) << ",";
    out << format_double(t.r) << ",";
    for (int i = 0; i < t.s_next.size(); ++i) out << format_double(t.s_next[i]) << ",";
    out << (t.done ? 1 : 0) << "\n";
  }
  for (const auto& s : data.initial_states.states) {
    for (int i = 0; i < s.size(); ++i) out << (i ? "," : "") << format_double(s[i]);
    out << "\n";
  }
  if (!out) throw IoError("failed while writing '" + path + "'");
}

OfflineDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  std::string header;
  if (!std::getline(in, header) || header.empty())
    throw ParseError("line 1: missing dataset header");

  OfflineDataset data;
  long n = -1, m_init = -1;
  int action_dim = -1;
  std::string action_kind, action_lower, action_upper;
  for (const auto& tok : split(header, ' ')) {
    if (tok.empty()) continue;
    const size_t eq = tok.find('=');
    if (eq == std::string::npos)
      throw ParseError("line 1: header token '" + tok + "' is not key=value");
    const std::string key = tok.substr(0, eq);
    const std::string value = tok.substr(eq + 1);
    if (key == "env") data.env_kind = value;
    else if (key == "state_dim") data.state_dim = static_cast<int>(parse_long(value, 1));
    else if (key == "action_kind") action_kind = value;
    else if (key == "action_dim") action_dim = static_cast<int>(parse_long(value, 1));
    else if (key == "gamma") data.gamma = parse_double(value, 1);
    else if (key == "n") n = parse_long(value, 1);
    else if (key == "m_init") m_init = parse_long(value, 1);
    else if (key == "action_lower") action_lower = value;
    else if (key == "action_upper") action_upper = value;
    else data.meta[key] = value;
  }
  if (data.state_dim < 1 || n < 1 || m_init < 0 || action_dim < 1 || action_kind.empty())
    throw SchemaError("header is missing required dataset fields");
  if (action_kind == "discrete") {
    data.action_space = ActionSpace::make_discrete(action_dim);
  } else if (action_kind == "box") {
    const auto lows = split(action_lower, ',');
    const auto highs = split(action_upper, ',');
    if (static_cast<int>(lows.size()) != action_dim
        || static_cast<int>(highs.size()) != action_dim)
      throw SchemaError("action box bounds do not match action_dim");
    Eigen::VectorXd lo(action_dim), hi(action_dim);
    for (int i = 0; i < action_dim; ++i) {
      lo[i] = parse_double(lows[i], 1);
      hi[i] = parse_double(highs[i], 1);
    }
    data.action_space = ActionSpace::make_box(lo, hi);
  } else {
    throw SchemaError("unknown action_kind '" + action_kind + "'");
  }

  const int acols = data.action_space.dim();
  const int expected = 2 * data.state_dim + acols + 2;
  std::string line;
  int line_no = 1;
  for (long row = 0; row < n; ++row) {
    if (!std::getline(in, line))
      throw ParseError("line " + std::to_string(line_no + 1)
                       + ": unexpected end of file (header promised n=" + std::to_string(n)
                       + " transitions)");
    ++line_no;
    const auto toks = split(line, ',');
    if (static_cast<int>(toks.size()) != expected)
      throw SchemaError("line " + std::to_string(line_no) + ": expected "
                        + std::to_string(expected) + " columns, got "
                        + std::to_string(toks.size()));
    Transition t;
    int c = 0;
    t.s.resize(data.state_dim);
    for (int i = 0; i < data.state_dim; ++i) t.s[i] = parse_double(toks[c++], line_no);
    t.a.resize(acols);
    for (int i = 0; i < acols; ++i) t.a[i] = parse_double(toks[c++], line_no);
    t.r = parse_double(toks[c++], line_no);
    t.s_next.resize(data.state_dim);
    for (int i = 0; i < data.state_dim; ++i) t.s_next[i] = parse_double(toks[c++], line_no);
    const double done = parse_double(toks[c++], line_no);
    if (done != 0.0 && done != 1.0)
      throw SchemaError("line " + std::to_string(line_no) + ": done flag must be 0 or 1");
    t.done = done != 0.0;
    data.transitions.push_back(std::move(t));
  }
  for (long row = 0; row < m_init; ++row) {
    if (!std::getline(in, line))
      throw ParseError("line " + std::to_string(line_no + 1)
                       + ": unexpected end of file in initial-state block");
    ++line_no;
    const auto toks = split(line, ',');
    if (static_cast<int>(toks.size()) != data.state_dim)
      throw SchemaError("line " + std::to_string(line_no) + ": expected "
                        + std::to_string(data.state_dim) + " columns, got "
                        + std::to_string(toks.size()));
    Eigen::VectorXd s(data.state_dim);
    for (int i = 0; i < data.state_dim; ++i) s[i] = parse_double(toks[i], line_no);
    data.initial_states.states.push_back(std::move(s));
  }
  return data;
}

bool dataset_equal(const OfflineDataset& a, const OfflineDataset& b) {
  if (a.env_kind != b.env_kind || a.state_dim != b.state_dim || a.gamma != b.gamma
      || a.meta != b.meta || a.size() != b.size()
      || a.initial_states.size() != b.initial_states.size())
    return false;
  if (a.action_space.kind != b.action_space.kind) return false;
  if (a.action_space.discrete()) {
    if (a.action_space.cardinality != b.action_space.cardinality) return false;
  } else if (a.action_space.lower != b.action_space.lower
             || a.action_space.upper != b.action_space.upper) {
    return false;
  }
  for (int i = 0; i < a.size(); ++i) {
    const auto& x = a.transitions[i];
    const auto& y = b.transitions[i];
    if (x.s != y.s || x.a != y.a || x.r != y.r || x.s_next != y.s_next || x.done != y.done)
      return false;
  }
  for (int i = 0; i < a.initial_states.size(); ++i)
    if (a.initial_states.states[i] != b.initial_states.states[i]) return false;
  return true;
}

}  // namespace stackrl
