// Field snapshots on disk: raw IEEE-754 binary64 little-endian cell values in
// row-major order at `path`, plus a JSON sidecar `path + ".json"` recording
// {d, n, L, bc, t}. Writes go to a temp file first and are renamed into place
// so readers never observe a partial snapshot.
#pragma once

#include <string>
#include <utility>

#include "porodyn/grid.hpp"

namespace porodyn {

void snapshot_write(const std::string& path, const Field& f, double t);

// Returns the field and the time stamp recorded in the sidecar.
// Throws IOError on missing/short files or a sidecar/grid mismatch.
std::pair<Field, double> snapshot_read(const std::string& path);

// Writes `text` to `path` atomically (temp file + rename).
void atomic_write_text(const std::string& path, const std::string& text);

}  // namespace porodyn
