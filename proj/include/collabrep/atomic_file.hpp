#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>

namespace collabrep {

// Writes through a sibling temporary file and renames it over `path`, so a
// reader never observes a partially written file. Throws DataError on I/O failure.
void write_atomically(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer,
                      bool binary = false);

}  // namespace collabrep
