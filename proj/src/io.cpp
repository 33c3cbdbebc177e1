#include "condu/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace condu::io {

namespace {

std::vector<std::string> split(const std::string& line)
{
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) {
      cell.pop_back();
    }
    while (!cell.empty() && cell.front() == ' ') {
      cell.erase(cell.begin());
    }
    out.push_back(cell);
  }
  return out;
}

double to_double(const std::string& s, const std::string& path, std::size_t line)
{
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw std::invalid_argument(path + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  }
  return v;
}

// Column positions of prefix1..prefixN in the header, ordered by suffix.
std::vector<std::size_t> columns_with_prefix(const std::vector<std::string>& header, char prefix,
                                             const std::string& path)
{
  std::vector<std::size_t> pos;
  for (std::size_t want = 1;; ++want) {
    const std::string name = std::string(1, prefix) + std::to_string(want);
    std::size_t found = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) {
        found = c;
      }
    }
    if (found == header.size()) {
      break;
    }
    pos.push_back(found);
  }
  std::size_t total = 0;
  for (const auto& h : header) {
    total += !h.empty() && h[0] == prefix;
  }
  if (total != pos.size()) {
    throw std::invalid_argument(path + ": columns " + std::string(1, prefix) + "1.." + std::string(1, prefix) +
                                "N must be numbered without gaps");
  }
  return pos;
}

std::ifstream open_in(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  return in;
}

} // namespace

ObservationSample read_sample_csv(const std::string& path)
{
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument(path + ": empty file");
  }
  const auto header = split(line);
  const auto xc = columns_with_prefix(header, 'x', path);
  const auto zc = columns_with_prefix(header, 'z', path);
  if (xc.empty() || zc.empty()) {
    throw std::invalid_argument(path + ": header needs x1.. and z1.. columns");
  }
  std::vector<double> xs;
  std::vector<double> zs;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") {
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(header.size()) + " fields");
    }
    for (auto c : xc) {
      xs.push_back(to_double(cells[c], path, lineno));
    }
    for (auto c : zc) {
      zs.push_back(to_double(cells[c], path, lineno));
    }
  }
  return ObservationSample(PointSet(xc.size(), std::move(xs)), PointSet(zc.size(), std::move(zs)));
}

void write_sample_csv(const std::string& path, const ObservationSample& sample)
{
  std::ostringstream out;
  out.precision(17);
  for (std::size_t a = 0; a < sample.x_dim(); ++a) {
    out << (a ? "," : "") << 'x' << a + 1;
  }
  for (std::size_t a = 0; a < sample.z_dim(); ++a) {
    out << ",z" << a + 1;
  }
  out << '\n';
  for (std::size_t i = 0; i < sample.size(); ++i) {
    for (std::size_t a = 0; a < sample.x_dim(); ++a) {
      out << (a ? "," : "") << sample.x(i)[a];
    }
    for (std::size_t a = 0; a < sample.z_dim(); ++a) {
      out << ',' << sample.z(i)[a];
    }
    out << '\n';
  }
  write_text(path, out.str());
}

std::vector<std::vector<double>> read_queries_csv(const std::string& path)
{
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument(path + ": empty file");
  }
  const auto header = split(line);
  const auto zc = columns_with_prefix(header, 'z', path);
  if (zc.empty()) {
    throw std::invalid_argument(path + ": header needs z1.. columns");
  }
  std::vector<std::vector<double>> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") {
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(header.size()) + " fields");
    }
    std::vector<double> q;
    for (auto c : zc) {
      q.push_back(to_double(cells[c], path, lineno));
    }
    out.push_back(std::move(q));
  }
  return out;
}

nlohmann::json read_json(const std::string& path)
{
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  out << text;
}

TupleMode parse_tuple_mode(const std::string& name)
{
  if (name == "full") {
    return TupleMode::full;
  }
  if (name == "increasing") {
    return TupleMode::increasing;
  }
  if (name == "subsample") {
    return TupleMode::subsample;
  }
  throw std::invalid_argument("tuples.mode: unknown mode '" + name + "'");
}

BasisModel parse_basis(const nlohmann::json& j, std::size_t k, std::size_t p)
{
  const std::string type = j.at("type").get<std::string>();
  if (type == "constant") {
    return constant_basis(k, p);
  }
  if (type == "polynomial") {
    return polynomial_basis(k, p, j.at("degree").get<std::size_t>(), j.value("radius", 1.0),
                            j.value("intercept", true));
  }
  if (type == "trigonometric") {
    const std::string terms = j.value("terms", std::string("both"));
    TrigTerms t = TrigTerms::both;
    if (terms == "sin") {
      t = TrigTerms::sin;
    } else if (terms == "cos") {
      t = TrigTerms::cos;
    } else if (terms != "both") {
      throw std::invalid_argument("basis.terms: expected sin, cos or both");
    }
    return trigonometric_basis(k, p, j.at("max_freq").get<std::size_t>(), t);
  }
  if (type == "indicator") {
    return indicator_basis(k, p, j.at("bins").get<std::size_t>(), j.at("lo").get<double>(), j.at("hi").get<double>());
  }
  if (type == "concat") {
    std::vector<BasisModel> parts;
    for (const auto& part : j.at("parts")) {
      parts.push_back(parse_basis(part, k, p));
    }
    return concat_bases(parts);
  }
  throw std::invalid_argument("basis.type: unknown basis '" + type + "'");
}

ModelConfig parse_model_config(const nlohmann::json& j)
{
  try {
    const auto& fj = j.at("functional");
    FunctionalParams fp;
    fp.b_g = fj.value("b_g", fp.b_g);
    fp.b_g_tilde = fj.value("b_g_tilde", fp.b_g_tilde);
    auto functional = builtin_functional(fj.at("name").get<std::string>(), fp);

    const auto& kj = j.at("kernel");
    const std::size_t p = j.value("z_dim", std::size_t{1});
    auto kernel = make_kernel(kj.at("name").get<std::string>(), p, kj.value("scale", 0.0));

    ModelConfig c(kernel, functional);
    c.h = j.at("h").get<double>();
    c.workers = j.value("workers", std::size_t{1});
    if (j.contains("basis")) {
      auto basis = parse_basis(j.at("basis"), functional.arity(), p);
      c.basis = basis.with_link(make_link(j.value("link", std::string("identity"))));
    }
    if (j.contains("design_points")) {
      for (const auto& row : j.at("design_points")) {
        const auto v = row.is_array() ? row.get<std::vector<double>>() : std::vector<double>{row.get<double>()};
        if (v.size() != p) {
          throw std::invalid_argument("design_points: every point needs z_dim coordinates");
        }
        c.design_points.insert(c.design_points.end(), v.begin(), v.end());
      }
      c.design_dim = p;
    }
    if (j.contains("tuples")) {
      const auto& tj = j.at("tuples");
      c.tuple_mode = parse_tuple_mode(tj.value("mode", std::string("full")));
      c.tuple_count = tj.value("m", std::size_t{0});
      c.tuple_seed = tj.value("seed", std::uint64_t{0});
    }
    if (j.contains("penalty")) {
      const auto& pj = j.at("penalty");
      c.penalty.lambda = pj.value("lambda", 0.0);
      c.penalty.adaptive = pj.value("adaptive", false);
      c.penalty.tilde_lambda = pj.value("tilde_lambda", 0.0);
      c.penalty.delta = pj.value("delta", 1.0);
      c.penalty.pilot_lambda = pj.value("pilot_lambda", 0.0);
    }
    if (j.contains("lasso")) {
      const auto& lj = j.at("lasso");
      c.lasso.kkt_tol = lj.value("kkt_tol", c.lasso.kkt_tol);
      c.lasso.change_tol = lj.value("change_tol", c.lasso.change_tol);
      c.lasso.max_sweeps = lj.value("max_sweeps", c.lasso.max_sweeps);
      c.lasso.standardize = lj.value("standardize", c.lasso.standardize);
    }
    if (j.contains("kappa")) {
      const auto& kj2 = j.at("kappa");
      KappaSpec ks;
      ks.s = kj2.at("s").get<std::size_t>();
      ks.c0 = kj2.value("c0", 3.0);
      const std::string strategy = kj2.value("strategy", std::string("exhaustive"));
      if (strategy == "exhaustive") {
        ks.options.strategy = REStrategy::exhaustive;
      } else if (strategy == "sampled") {
        ks.options.strategy = REStrategy::sampled;
      } else {
        throw std::invalid_argument("kappa.strategy: expected exhaustive or sampled");
      }
      ks.options.seed = kj2.value("seed", std::uint64_t{0});
      ks.options.samples = kj2.value("samples", ks.options.samples);
      c.kappa = ks;
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

ModelConfig read_model_config(const std::string& path)
{
  return parse_model_config(read_json(path));
}

} // namespace condu::io
