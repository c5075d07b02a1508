#include "crl/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace crl {

namespace {

constexpr char kMagic[8] = {'C', 'R', 'L', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ConfigError("checkpoint: truncated file");
  return v;
}

std::string net_payload(const DenseNet& net) {
  std::ostringstream os(std::ios::binary);
  const auto& sizes = net.layer_sizes();
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(sizes.size()));
  for (int s : sizes) write_pod<std::int32_t>(os, s);
  write_pod<std::uint8_t>(os, net.activation() == Activation::Tanh ? 0 : 1);
  write_pod<std::uint8_t>(os, net.layer_norm_first() ? 1 : 0);
  write_pod<std::uint16_t>(os, 0);
  const Vec p = net.params_flat();  // row-major weights then bias, per layer
  os.write(reinterpret_cast<const char*>(p.data()),
           static_cast<std::streamsize>(sizeof(double) * p.size()));
  return os.str();
}

void load_net_payload(const std::string& payload, DenseNet& net) {
  std::istringstream is(payload, std::ios::binary);
  const auto n_sizes = read_pod<std::uint32_t>(is);
  std::vector<int> sizes(n_sizes);
  for (auto& s : sizes) s = read_pod<std::int32_t>(is);
  const auto act = read_pod<std::uint8_t>(is);
  const auto ln = read_pod<std::uint8_t>(is);
  read_pod<std::uint16_t>(is);
  if (sizes != net.layer_sizes() ||
      (act == 0) != (net.activation() == Activation::Tanh) ||
      (ln == 1) != net.layer_norm_first())
    throw ConfigError("checkpoint: network architecture mismatch");
  Vec p(net.param_count());
  is.read(reinterpret_cast<char*>(p.data()),
          static_cast<std::streamsize>(sizeof(double) * p.size()));
  if (!is) throw ConfigError("checkpoint: truncated network payload");
  net.set_params_flat(p);
}

std::string vec_payload(const Vec& v) {
  std::ostringstream os(std::ios::binary);
  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(sizeof(double) * v.size()));
  return os.str();
}

Vec load_vec_payload(const std::string& payload) {
  std::istringstream is(payload, std::ios::binary);
  const auto n = read_pod<std::uint64_t>(is);
  Vec v(static_cast<Eigen::Index>(n));
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(sizeof(double) * n));
  if (!is) throw ConfigError("checkpoint: truncated vector payload");
  return v;
}

std::string adam_payload(const AdamState& st) {
  std::ostringstream os(std::ios::binary);
  write_pod<std::int64_t>(os, st.t);
  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(st.m.size()));
  os.write(reinterpret_cast<const char*>(st.m.data()),
           static_cast<std::streamsize>(sizeof(double) * st.m.size()));
  os.write(reinterpret_cast<const char*>(st.v.data()),
           static_cast<std::streamsize>(sizeof(double) * st.v.size()));
  return os.str();
}

AdamState load_adam_payload(const std::string& payload) {
  std::istringstream is(payload, std::ios::binary);
  AdamState st;
  st.t = read_pod<std::int64_t>(is);
  const auto n = read_pod<std::uint64_t>(is);
  st.m.resize(static_cast<Eigen::Index>(n));
  st.v.resize(static_cast<Eigen::Index>(n));
  is.read(reinterpret_cast<char*>(st.m.data()),
          static_cast<std::streamsize>(sizeof(double) * n));
  is.read(reinterpret_cast<char*>(st.v.data()),
          static_cast<std::streamsize>(sizeof(double) * n));
  if (!is) throw ConfigError("checkpoint: truncated adam payload");
  return st;
}

using SectionMap = std::map<std::string, std::string>;

void write_sections(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& sections) {
  os.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(os, kVersion);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(sections.size()));
  for (const auto& [name, payload] : sections) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(payload.size()));
    os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  }
}

SectionMap read_sections(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ConfigError("checkpoint: bad magic bytes");
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kVersion) throw ConfigError("checkpoint: unknown version");
  const auto count = read_pod<std::uint32_t>(is);
  SectionMap out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto payload_len = read_pod<std::uint64_t>(is);
    std::string payload(static_cast<std::size_t>(payload_len), '\0');
    is.read(payload.data(), static_cast<std::streamsize>(payload_len));
    if (!is) throw ConfigError("checkpoint: truncated section");
    out.emplace(std::move(name), std::move(payload));
  }
  return out;
}

const std::string& section(const SectionMap& m, const std::string& name) {
  auto it = m.find(name);
  if (it == m.end())
    throw ConfigError("checkpoint: missing section '" + name + "'");
  return it->second;
}

}  // namespace

void save_agent(std::ostream& os, const SacLagrangian& agent,
                const MultiplierBank& bank) {
  std::vector<std::pair<std::string, std::string>> sections;
  sections.emplace_back("policy/trunk", net_payload(agent.policy().trunk()));
  if (agent.policy().mode() == LogStdMode::Global)
    sections.emplace_back("policy/log_std",
                          vec_payload(agent.policy().global_log_std()));
  sections.emplace_back("policy/adam", adam_payload(agent.policy_adam()));
  const auto& critics = agent.critics();
  for (std::size_t k = 0; k < critics.size(); ++k) {
    for (int j = 0; j < 2; ++j) {
      std::ostringstream base;
      base << "critic" << k << "/" << j;
      sections.emplace_back(base.str() + "/online",
                            net_payload(critics[k].online[j]));
      sections.emplace_back(base.str() + "/target",
                            net_payload(critics[k].target[j]));
      sections.emplace_back(base.str() + "/adam",
                            adam_payload(critics[k].adam[j]));
    }
  }
  sections.emplace_back("bank/params", vec_payload(bank.base_params()));
  sections.emplace_back("bank/adam", adam_payload(bank.adam_state()));
  write_sections(os, sections);
}

void load_agent(std::istream& is, SacLagrangian& agent, MultiplierBank& bank) {
  const SectionMap m = read_sections(is);
  load_net_payload(section(m, "policy/trunk"), agent.policy().trunk());
  if (agent.policy().mode() == LogStdMode::Global) {
    Vec ls = load_vec_payload(section(m, "policy/log_std"));
    Vec p = agent.policy().params_flat();
    p.tail(ls.size()) = ls;
    agent.policy().set_params_flat(p);
  }
  agent.policy_adam() = load_adam_payload(section(m, "policy/adam"));
  auto& critics = agent.critics();
  for (std::size_t k = 0; k < critics.size(); ++k) {
    for (int j = 0; j < 2; ++j) {
      std::ostringstream base;
      base << "critic" << k << "/" << j;
      load_net_payload(section(m, base.str() + "/online"),
                       critics[k].online[j]);
      load_net_payload(section(m, base.str() + "/target"),
                       critics[k].target[j]);
      critics[k].adam[j] = load_adam_payload(section(m, base.str() + "/adam"));
    }
  }
  Vec bp = load_vec_payload(section(m, "bank/params"));
  bank.set_base_params(bp);
  bank.set_adam_state(load_adam_payload(section(m, "bank/adam")));
}

void save_agent_file(const std::string& path, const SacLagrangian& agent,
                     const MultiplierBank& bank) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "cannot open checkpoint for writing: " + path);
  save_agent(os, agent, bank);
  require(os.good(), "checkpoint write failed: " + path);
}

void load_agent_file(const std::string& path, SacLagrangian& agent,
                     MultiplierBank& bank) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "cannot open checkpoint: " + path);
  load_agent(is, agent, bank);
}

void load_policy_file(const std::string& path, PolicyModel& policy) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "cannot open checkpoint: " + path);
  const SectionMap m = read_sections(is);
  load_net_payload(section(m, "policy/trunk"), policy.trunk());
  if (policy.mode() == LogStdMode::Global) {
    Vec ls = load_vec_payload(section(m, "policy/log_std"));
    Vec p = policy.params_flat();
    p.tail(ls.size()) = ls;
    policy.set_params_flat(p);
  }
}

}  // namespace crl
