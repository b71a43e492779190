#include "collabrep/dictionary_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "collabrep/atomic_file.hpp"

namespace collabrep {

namespace {

constexpr std::array<char, 8> kMagic{'C', 'R', 'D', 'I', 'C', 'T', '\0', '\0'};
// Guards against absurd allocations from corrupt headers.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 34;

template <typename T>
void put_le(std::ostream& out, T value) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t k = 0; k < sizeof(T); ++k) bytes[k] = static_cast<char>((bits >> (8 * k)) & 0xFFu);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw DataError(std::string("dictionary: truncated file while reading ") + what);
  std::uint64_t bits = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k) bits |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
  if constexpr (std::is_same_v<T, double>) {
    return std::bit_cast<double>(bits);
  } else {
    return static_cast<T>(bits);
  }
}

}  // namespace

void save_dictionary(const std::filesystem::path& path, const StoredDictionary& stored) {
  const BlockDictionary& dict = stored.dictionary;
  if (dict.num_classes() < 1) throw InvalidArgument("dictionary: nothing to save");
  const std::string meta = stored.metadata.dump();
  write_atomically(
      path,
      [&](std::ostream& out) {
        out.write(kMagic.data(), kMagic.size());
        put_le<std::uint32_t>(out, kDictionaryFormatVersion);
        put_le<std::uint64_t>(out, static_cast<std::uint64_t>(dict.dim()));
        put_le<std::uint64_t>(out, static_cast<std::uint64_t>(dict.size()));
        put_le<std::uint64_t>(out, static_cast<std::uint64_t>(dict.num_classes()));
        for (Index k : dict.block_sizes()) put_le<std::uint64_t>(out, static_cast<std::uint64_t>(k));
        put_le<double>(out, stored.lambda1);
        put_le<std::uint64_t>(out, meta.size());
        out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
        const double* data = dict.atoms().data();
        for (Index k = 0; k < dict.atoms().size(); ++k) put_le<double>(out, data[k]);
      },
      true);
}

StoredDictionary load_dictionary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("dictionary: cannot open '" + path.string() + "'");
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw DataError("dictionary: '" + path.string() + "' is not a dictionary file");
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kDictionaryFormatVersion) {
    throw DataError("dictionary: unsupported format version " + std::to_string(version));
  }
  const auto d = get_le<std::uint64_t>(in, "d");
  const auto K = get_le<std::uint64_t>(in, "K");
  const auto L = get_le<std::uint64_t>(in, "L");
  if (d == 0 || K == 0 || L == 0 || L > K || d > kMaxElements / K) throw DataError("dictionary: invalid header sizes");
  std::vector<Index> sizes;
  sizes.reserve(L);
  for (std::uint64_t c = 0; c < L; ++c) sizes.push_back(static_cast<Index>(get_le<std::uint64_t>(in, "block size")));

  StoredDictionary stored;
  stored.lambda1 = get_le<double>(in, "lambda1");
  const auto meta_len = get_le<std::uint64_t>(in, "metadata length");
  if (meta_len > kMaxElements) throw DataError("dictionary: invalid metadata length");
  std::string meta(meta_len, '\0');
  in.read(meta.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw DataError("dictionary: truncated metadata");
  try {
    stored.metadata = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("dictionary: malformed metadata: ") + e.what());
  }

  Eigen::MatrixXd atoms(static_cast<Index>(d), static_cast<Index>(K));
  double* data = atoms.data();
  for (Index k = 0; k < atoms.size(); ++k) data[k] = get_le<double>(in, "atoms");
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("dictionary: trailing bytes after atoms");
  try {
    stored.dictionary = BlockDictionary(std::move(atoms), std::move(sizes));
  } catch (const Error& e) {
    throw DataError(std::string("dictionary: ") + e.what());
  }
  return stored;
}

}  // namespace collabrep
