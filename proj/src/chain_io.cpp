#include "epifield/chain_io.hpp"

#include "epifield/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace epifield {

static_assert(std::endian::native == std::endian::little, "chain files are little-endian");

namespace {

constexpr char magic[8] = {'E', 'F', 'C', 'H', 'A', 'I', 'N', '1'};

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  auto p = stem;
  p += ext;
  return p;
}

template <class T> void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T> T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ParseError("truncated chain file");
  return v;
}

} // namespace

void write_chain(const std::filesystem::path& stem, const Chain& chain, const nlohmann::json& extra) {
  {
    std::ofstream out(with_ext(stem, ".bin"), std::ios::binary | std::ios::trunc);
    if (!out) throw NotFoundError("cannot write " + with_ext(stem, ".bin").string());
    out.write(magic, sizeof magic);
    put<std::uint64_t>(out, chain.n_kept());
    put<std::uint64_t>(out, chain.dim());
    for (Eigen::Index c = 0; c < chain.samples.cols(); ++c)
      out.write(reinterpret_cast<const char*>(chain.samples.col(c).data()),
                static_cast<std::streamsize>(sizeof(double) * chain.n_kept()));
    out.write(reinterpret_cast<const char*>(chain.log_post.data()),
              static_cast<std::streamsize>(sizeof(double) * chain.log_post.size()));
  }
  const auto& c = chain.config;
  nlohmann::json meta = {
      {"format", "epifield-chain-1"},
      {"names", chain.names},
      {"rows", chain.n_kept()},
      {"cols", chain.dim()},
      {"seed", chain.seed},
      {"acceptance_rate", chain.acceptance_rate},
      {"adapted_acceptance_rate", chain.adapted_acceptance_rate},
      {"proposal_cov_trace", chain.proposal_cov_trace},
      {"config",
       {{"n_steps", c.n_steps},
        {"adapt_start", c.adapt_start},
        {"burn_in", c.burn_in},
        {"thin", c.thin},
        {"seed", c.seed},
        {"epsilon", c.epsilon},
        {"refresh_current", c.refresh_current},
        {"trace_every", c.trace_every}}},
      {"extra", extra},
  };
  std::ofstream out(with_ext(stem, ".json"), std::ios::trunc);
  if (!out) throw NotFoundError("cannot write " + with_ext(stem, ".json").string());
  out << meta.dump(2) << '\n';
}

StoredChain read_chain(const std::filesystem::path& stem) {
  std::ifstream meta_in(with_ext(stem, ".json"));
  if (!meta_in) throw NotFoundError("cannot open " + with_ext(stem, ".json").string());
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(with_ext(stem, ".json").string() + ": " + e.what());
  }

  std::ifstream in(with_ext(stem, ".bin"), std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + with_ext(stem, ".bin").string());
  char head[8];
  in.read(head, sizeof head);
  if (!in || std::memcmp(head, magic, sizeof magic) != 0) throw ParseError("not an epifield chain file");
  const auto rows = get<std::uint64_t>(in);
  const auto cols = get<std::uint64_t>(in);
  if (rows != meta.at("rows").get<std::uint64_t>() || cols != meta.at("cols").get<std::uint64_t>())
    throw ParseError("chain data and metadata disagree on shape");

  StoredChain s;
  auto& ch = s.chain;
  ch.samples.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index c = 0; c < ch.samples.cols(); ++c)
    in.read(reinterpret_cast<char*>(ch.samples.col(c).data()), static_cast<std::streamsize>(sizeof(double) * rows));
  ch.log_post.resize(rows);
  in.read(reinterpret_cast<char*>(ch.log_post.data()), static_cast<std::streamsize>(sizeof(double) * rows));
  if (!in) throw ParseError("truncated chain file");

  ch.names = meta.at("names").get<std::vector<std::string>>();
  ch.seed = meta.at("seed").get<std::uint64_t>();
  ch.acceptance_rate = meta.at("acceptance_rate").get<double>();
  ch.adapted_acceptance_rate = meta.at("adapted_acceptance_rate").get<double>();
  ch.proposal_cov_trace = meta.at("proposal_cov_trace").get<std::vector<double>>();
  const auto& c = meta.at("config");
  ch.config.n_steps = c.at("n_steps");
  ch.config.adapt_start = c.at("adapt_start");
  ch.config.burn_in = c.at("burn_in");
  ch.config.thin = c.at("thin");
  ch.config.seed = c.at("seed");
  ch.config.epsilon = c.at("epsilon");
  ch.config.refresh_current = c.at("refresh_current");
  ch.config.trace_every = c.at("trace_every");
  s.extra = meta.at("extra");
  return s;
}

} // namespace epifield
