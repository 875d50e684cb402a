#pragma once

#include <iosfwd>
#include <string>

#include "clouddet/store.hpp"

namespace clouddet::snapshot {

class SnapshotError : public Error {
 public:
  using Error::Error;
};

/// Little-endian binary layout:
///   "CDS1"
///   manifest: str dataset_id, u32 n + str centers, u32 n + str metrics,
///             u8 granularity code, i64 row_count, u64 series count
///   per series: str center, str cluster, str node, str metric, i64 start,
///               u8 granularity code, u64 length, length x f64 values,
///               ceil(length / 8) bytes of missing bits (LSB first)
/// where str is a u32 byte length followed by the bytes.
void write_snapshot(std::ostream& out, const store::Dataset& dataset);
store::Dataset read_snapshot(std::istream& in);

/// Writes to a temporary file and renames it over `path`.
void save_snapshot(const std::string& path, const store::Dataset& dataset);
store::Dataset load_snapshot(const std::string& path);

}  // namespace clouddet::snapshot
