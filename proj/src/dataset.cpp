#include "memspm/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "memspm/errors.hpp"
#include "memspm/losses.hpp"

namespace memspm {

std::int32_t EmbeddingDataset::num_classes() const {
  std::int32_t m = -1;
  for (std::int32_t l : labels) m = std::max(m, l);
  return m + 1;
}

const std::vector<std::int32_t>& EmbeddingDataset::ground_truth() const {
  return has_hidden_labels() ? hidden_labels : labels;
}

void EmbeddingDataset::validate() const {
  if (labels.size() != size()) throw ContractViolation("dataset: label count mismatch");
  if (has_subclusters() && subcluster_ids.size() != size())
    throw ContractViolation("dataset: subcluster count mismatch");
  if (has_hidden_labels() && hidden_labels.size() != size())
    throw ContractViolation("dataset: hidden label count mismatch");
  if (!vectors.all_finite()) throw ContractViolation("dataset: non-finite vector entry");
  if (domain == Domain::source) {
    for (std::int32_t l : labels) {
      if (l < 0) throw ContractViolation("dataset: source labels must be >= 0");
    }
  }
}

namespace {

constexpr char kMagic[4] = {'M', 'S', 'P', 'M'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderSize = 32;

void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_dataset(const EmbeddingDataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("write_dataset: cannot open " + path);

  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(ds.size()));
  put_u32(out, static_cast<std::uint32_t>(ds.dim()));
  const unsigned char domain = static_cast<unsigned char>(ds.domain);
  const unsigned char has_sub = ds.has_subclusters() ? 1 : 0;
  out.write(reinterpret_cast<const char*>(&domain), 1);
  out.write(reinterpret_cast<const char*>(&has_sub), 1);
  const char pad[14] = {};
  out.write(pad, sizeof(pad));

  std::vector<float> narrow(ds.vectors.size());
  for (std::size_t i = 0; i < narrow.size(); ++i)
    narrow[i] = static_cast<float>(ds.vectors.data()[i]);
  out.write(reinterpret_cast<const char*>(narrow.data()),
            static_cast<std::streamsize>(narrow.size() * sizeof(float)));
  out.write(reinterpret_cast<const char*>(ds.labels.data()),
            static_cast<std::streamsize>(ds.labels.size() * sizeof(std::int32_t)));
  if (ds.has_subclusters()) {
    out.write(reinterpret_cast<const char*>(ds.subcluster_ids.data()),
              static_cast<std::streamsize>(ds.subcluster_ids.size() * sizeof(std::int32_t)));
  }
  if (!out) throw IoError("write_dataset: write failed for " + path);
}

EmbeddingDataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_dataset: cannot open " + path);

  unsigned char header[kHeaderSize];
  in.read(reinterpret_cast<char*>(header), kHeaderSize);
  if (in.gcount() != static_cast<std::streamsize>(kHeaderSize))
    throw FormatError("read_dataset: truncated header", static_cast<std::size_t>(in.gcount()));
  if (std::memcmp(header, kMagic, 4) != 0) throw FormatError("read_dataset: bad magic", 0);
  if (get_u32(header + 4) != kVersion)
    throw FormatError("read_dataset: unsupported version", 4);
  const std::size_t n = get_u32(header + 8);
  const std::size_t d = get_u32(header + 12);
  if (header[16] > 1) throw FormatError("read_dataset: bad domain tag", 16);
  if (header[17] > 1) throw FormatError("read_dataset: bad subcluster flag", 17);

  EmbeddingDataset ds;
  ds.domain = static_cast<Domain>(header[16]);
  ds.vectors = RealMatrix(n, d);
  std::size_t offset = kHeaderSize;

  std::vector<float> narrow(n * d);
  in.read(reinterpret_cast<char*>(narrow.data()),
          static_cast<std::streamsize>(narrow.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(narrow.size() * sizeof(float)))
    throw FormatError("read_dataset: truncated vector block",
                      offset + static_cast<std::size_t>(in.gcount()));
  for (std::size_t i = 0; i < narrow.size(); ++i)
    ds.vectors.data()[i] = static_cast<double>(narrow[i]);
  offset += narrow.size() * sizeof(float);

  ds.labels.resize(n);
  in.read(reinterpret_cast<char*>(ds.labels.data()),
          static_cast<std::streamsize>(n * sizeof(std::int32_t)));
  if (in.gcount() != static_cast<std::streamsize>(n * sizeof(std::int32_t)))
    throw FormatError("read_dataset: truncated label block",
                      offset + static_cast<std::size_t>(in.gcount()));
  offset += n * sizeof(std::int32_t);

  if (header[17] == 1) {
    ds.subcluster_ids.resize(n);
    in.read(reinterpret_cast<char*>(ds.subcluster_ids.data()),
            static_cast<std::streamsize>(n * sizeof(std::int32_t)));
    if (in.gcount() != static_cast<std::streamsize>(n * sizeof(std::int32_t)))
      throw FormatError("read_dataset: truncated subcluster block",
                        offset + static_cast<std::size_t>(in.gcount()));
  }
  return ds;
}

EmbeddingDataset import_csv(const std::string& path, Domain domain) {
  std::ifstream in(path);
  if (!in) throw IoError("import_csv: cannot open " + path);

  auto split_line = [](const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur.push_back(c);
      }
    }
    fields.push_back(cur);
    return fields;
  };

  std::string line;
  if (!std::getline(in, line)) throw FormatError("import_csv: missing header", 0);
  const std::vector<std::string> header = split_line(line);
  if (header.empty() || header[0] != "label")
    throw FormatError("import_csv: header must start with 'label'", 0);
  const bool has_sub = header.size() > 1 && header[1] == "subcluster";
  const std::size_t skip = has_sub ? 2 : 1;
  if (header.size() <= skip) throw FormatError("import_csv: no feature columns", 0);
  const std::size_t d = header.size() - skip;

  std::vector<std::int32_t> labels, subs;
  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size())
      throw FormatError("import_csv: row " + std::to_string(row) + " has wrong field count", 0);
    try {
      labels.push_back(static_cast<std::int32_t>(std::stol(fields[0])));
      if (has_sub) subs.push_back(static_cast<std::int32_t>(std::stol(fields[1])));
      for (std::size_t i = skip; i < fields.size(); ++i) values.push_back(std::stod(fields[i]));
    } catch (const std::exception&) {
      throw FormatError("import_csv: unparsable value in row " + std::to_string(row), 0);
    }
  }

  EmbeddingDataset ds;
  ds.domain = domain;
  ds.vectors = RealMatrix(labels.size(), d);
  std::copy(values.begin(), values.end(), ds.vectors.data());
  ds.labels = std::move(labels);
  ds.subcluster_ids = std::move(subs);
  ds.validate();
  return ds;
}

EmbeddingDataset hide_labels(const EmbeddingDataset& ds) {
  EmbeddingDataset out = ds;
  out.hidden_labels = ds.labels;
  std::fill(out.labels.begin(), out.labels.end(), kUnlabeled);
  out.domain = Domain::target;
  return out;
}

EmbeddingDataset apply_split(const EmbeddingDataset& ds, const LabelSplit& split, Domain role) {
  const std::vector<std::int32_t> wanted =
      role == Domain::source ? split.source_classes() : split.target_classes();
  const std::set<std::int32_t> keep(wanted.begin(), wanted.end());

  EmbeddingDataset out;
  out.domain = role;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.labels[i] >= 0 && keep.count(ds.labels[i])) rows.push_back(i);
  }
  if (rows.empty()) throw ContractViolation("apply_split: no samples match the requested split");

  out.vectors = RealMatrix(rows.size(), ds.dim());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto src = ds.vectors.row(rows[r]);
    std::copy(src.begin(), src.end(), out.vectors.row(r).begin());
    out.labels.push_back(ds.labels[rows[r]]);
    if (ds.has_subclusters()) out.subcluster_ids.push_back(ds.subcluster_ids[rows[r]]);
  }
  if (role == Domain::target) return hide_labels(out);
  return out;
}

}  // namespace memspm
