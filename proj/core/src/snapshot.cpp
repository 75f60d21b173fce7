#include "porodyn/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace porodyn {

namespace {

void swap_to_little_endian(std::vector<double>& buf) {
  if constexpr (std::endian::native == std::endian::little) {
    (void)buf;
  } else {
    for (double& x : buf) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, sizeof(bits));
      bits = __builtin_bswap64(bits);
      std::memcpy(&x, &bits, sizeof(bits));
    }
  }
}

void atomic_write_bytes(const std::string& path, const char* data, size_t size) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IOError("cannot open " + tmp + " for writing");
    out.write(data, static_cast<std::streamsize>(size));
    if (!out) throw IOError("short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IOError("cannot rename " + tmp + " to " + path);
}

std::string bc_name(BC bc) { return bc == BC::Periodic ? "periodic" : "zero_flux"; }

BC bc_from_name(const std::string& s) {
  if (s == "periodic") return BC::Periodic;
  if (s == "zero_flux") return BC::ZeroFlux;
  throw IOError("unknown boundary condition '" + s + "' in snapshot sidecar");
}

}  // namespace

void atomic_write_text(const std::string& path, const std::string& text) {
  atomic_write_bytes(path, text.data(), text.size());
}

void snapshot_write(const std::string& path, const Field& f, double t) {
  std::vector<double> buf = f.v;
  swap_to_little_endian(buf);
  atomic_write_bytes(path, reinterpret_cast<const char*>(buf.data()), buf.size() * sizeof(double));

  nlohmann::json sidecar;
  sidecar["d"] = f.grid.d;
  sidecar["n"] = f.grid.n;
  sidecar["L"] = f.grid.L;
  sidecar["bc"] = bc_name(f.grid.bc);
  sidecar["t"] = t;
  atomic_write_text(path + ".json", sidecar.dump(2) + "\n");
}

std::pair<Field, double> snapshot_read(const std::string& path) {
  nlohmann::json sidecar;
  {
    std::ifstream in(path + ".json");
    if (!in) throw IOError("cannot open snapshot sidecar " + path + ".json");
    try {
      in >> sidecar;
    } catch (const std::exception& e) {
      throw IOError("malformed snapshot sidecar " + path + ".json: " + e.what());
    }
  }
  Grid g;
  double t;
  try {
    g.d = sidecar.at("d").get<int>();
    g.n = sidecar.at("n").get<int>();
    g.L = sidecar.at("L").get<double>();
    g.bc = bc_from_name(sidecar.at("bc").get<std::string>());
    t = sidecar.at("t").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IOError("snapshot sidecar " + path + ".json missing fields: " + e.what());
  }
  g.validate();

  Field f(g);
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open snapshot data " + path);
    in.read(reinterpret_cast<char*>(f.v.data()),
            static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(f.v.size() * sizeof(double)))
      throw IOError("snapshot data " + path + " shorter than the sidecar grid implies");
    char extra;
    if (in.read(&extra, 1))
      throw IOError("snapshot data " + path + " longer than the sidecar grid implies");
  }
  swap_to_little_endian(f.v);
  return {std::move(f), t};
}

}  // namespace porodyn
