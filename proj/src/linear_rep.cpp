#include "maskx/linear_rep.hpp"

#include <cstdint>
#include <fstream>

namespace maskx {

void dump_coeffs(const LinearRep& rep, std::span<const double> coeffs, const std::string& path) {
  require(coeffs.size() == rep.coeff_size(), Errc::shape_mismatch, "dump_coeffs: size mismatch");
  const std::size_t pix = std::size_t(rep.height()) * rep.width();
  require(coeffs.size() % pix == 0, Errc::internal, "dump_coeffs: non-planar representation");

  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::io, "cannot open file for writing: " + path);

  // Little-endian u32 header: magic "MXC1", plane count, H, W. Assumes a
  // little-endian host, as does the rest of the flat-file IO.
  const std::uint32_t header[4] = {0x3143584Du, std::uint32_t(coeffs.size() / pix),
                                   std::uint32_t(rep.height()), std::uint32_t(rep.width())};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(coeffs.data()),
            std::streamsize(coeffs.size() * sizeof(double)));
  require(out.good(), Errc::io, "write failed: " + path);
}

}  // namespace maskx
