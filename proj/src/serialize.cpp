#include "brwlab/serialize.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>

namespace brw {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, std::size_t line) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0')
    throw ValidationError("line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

long long parse_int(const std::string& s, std::size_t line) {
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0')
    throw ValidationError("line " + std::to_string(line) + ": bad integer '" + s + "'");
  return v;
}

std::pair<std::string, std::string> split_colon(const std::string& s,
                                                std::size_t line) {
  auto c = s.rfind(':');
  if (c == std::string::npos)
    throw ValidationError("line " + std::to_string(line) + ": expected a:b, got '" + s + "'");
  return {s.substr(0, c), s.substr(c + 1)};
}

}  // namespace

void write_model(std::ostream& out, const BrwModel& model) {
  const auto& meta = model.metadata();
  out << "# brwlab-model 1\n";
  out << "# scenario " << meta.scenario << "\n";
  for (const auto& [k, v] : meta.params) out << "# param " << k << "=" << v << "\n";
  out << "# truncation " << meta.truncation_index << "\n";
  if (!meta.labeling.empty()) out << "# labeling " << meta.labeling << "\n";
  if (model.interior().size() != model.size()) {
    out << "# interior";
    for (VertexId v : model.interior()) out << ' ' << v;
    out << "\n";
  }
  for (std::size_t i = 0; i < model.size(); ++i) {
    const VertexId x = model.vertex(i);
    const OffspringLaw& law = model.law(i);
    if (law.form() == OffspringLaw::Form::product) {
      out << "P " << x << " rho=";
      bool first = true;
      for (const auto& pt : law.rho()->points()) {
        out << (first ? "" : ",") << pt.n << ':' << fmt(pt.p);
        first = false;
      }
      out << " void=" << fmt(law.void_mass());
      for (const auto& e : law.dispersal()) out << ' ' << e.vertex << ':' << fmt(e.weight);
      out << "\n";
      continue;
    }
    for (const auto& atom : law.explicit_atoms()) {
      out << "A " << x << ' ' << fmt(atom.probability);
      for (const auto& [v, k] : atom.config.entries()) out << ' ' << v << ':' << k;
      out << "\n";
    }
  }
}

std::string serialize_model(const BrwModel& model) {
  std::ostringstream out;
  write_model(out, model);
  return out.str();
}

BrwModel read_model(std::istream& in) {
  ModelMetadata meta;
  std::vector<VertexId> interior;
  bool has_interior = false;
  std::vector<VertexId> order;
  std::map<VertexId, std::vector<Atom>> atoms;
  std::map<VertexId, OffspringLaw> product;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  auto note = [&](VertexId v) {
    if (!atoms.count(v) && !product.count(v)) order.push_back(v);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "#") {
      std::string key;
      ls >> key;
      std::string rest;
      std::getline(ls, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
      if (key == "brwlab-model") {
        if (rest != "1") throw ValidationError("unsupported model format version " + rest);
        header = true;
      } else if (key == "scenario") {
        meta.scenario = rest;
      } else if (key == "param") {
        auto eq = rest.find('=');
        if (eq == std::string::npos)
          throw ValidationError("line " + std::to_string(lineno) + ": param without '='");
        meta.params.emplace_back(rest.substr(0, eq), rest.substr(eq + 1));
      } else if (key == "truncation") {
        meta.truncation_index = static_cast<std::size_t>(parse_int(rest, lineno));
      } else if (key == "labeling") {
        meta.labeling = rest;
      } else if (key == "interior") {
        has_interior = true;
        std::istringstream is(rest);
        std::string tok;
        while (is >> tok) interior.push_back(parse_int(tok, lineno));
      }
      continue;
    }
    if (!header) throw ValidationError("missing '# brwlab-model 1' header");
    if (tag == "A") {
      std::string vtok, ptok;
      ls >> vtok >> ptok;
      VertexId x = parse_int(vtok, lineno);
      if (product.count(x))
        throw ValidationError("line " + std::to_string(lineno) + ": vertex has two law forms");
      note(x);
      std::vector<std::pair<VertexId, std::int64_t>> entries;
      std::string tok;
      while (ls >> tok) {
        auto [a, b] = split_colon(tok, lineno);
        entries.emplace_back(parse_int(a, lineno), parse_int(b, lineno));
      }
      atoms[x].push_back(Atom{OffspringConfig::from_signed(entries),
                              parse_double(ptok, lineno)});
    } else if (tag == "P") {
      std::string vtok, rtok, vdtok;
      ls >> vtok >> rtok >> vdtok;
      VertexId x = parse_int(vtok, lineno);
      if (atoms.count(x) || product.count(x))
        throw ValidationError("line " + std::to_string(lineno) + ": vertex defined twice");
      if (rtok.rfind("rho=", 0) != 0 || vdtok.rfind("void=", 0) != 0)
        throw ValidationError("line " + std::to_string(lineno) + ": malformed product law");
      auto rho = std::make_shared<const IntDistribution>(
          IntDistribution::parse(rtok.substr(4)));
      double lost = parse_double(vdtok.substr(5), lineno);
      Row row;
      std::string tok;
      while (ls >> tok) {
        auto [a, b] = split_colon(tok, lineno);
        row.push_back({parse_int(a, lineno), parse_double(b, lineno)});
      }
      note(x);
      product.emplace(x, OffspringLaw::product(std::move(rho), std::move(row), lost));
    } else {
      throw ValidationError("line " + std::to_string(lineno) + ": unknown record '" + tag + "'");
    }
  }
  if (!header) throw ValidationError("missing '# brwlab-model 1' header");
  std::vector<OffspringLaw> laws;
  for (VertexId v : order) {
    auto it = product.find(v);
    if (it != product.end())
      laws.push_back(it->second);
    else
      laws.push_back(OffspringLaw::from_atoms(atoms.at(v)));
  }
  BrwModel model(order, std::move(laws), std::move(meta));
  if (has_interior) model = model.with_interior(std::move(interior));
  return model;
}

BrwModel parse_model(const std::string& text) {
  std::istringstream in(text);
  return read_model(in);
}

std::string content_hash(const std::string& bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error("SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string model_hash(const BrwModel& model) {
  return content_hash(serialize_model(model));
}

}  // namespace brw
