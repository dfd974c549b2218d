#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "corecsp/detail/strings.hpp"
#include "corecsp/errors.hpp"

namespace corecsp {

// Reader for the 16-bit, single-rate EDF subset sufficient for the Physionet
// motor-imagery corpus. EDF+ annotation signals are skipped, not parsed.
struct EdfChannel {
  std::string label;
  std::string physical_dimension;
  double physical_min = 0.0;
  double physical_max = 0.0;
  int digital_min = 0;
  int digital_max = 0;
  Eigen::Index samples_per_record = 0;
  Eigen::VectorXd samples;  // physical units, all records concatenated
};

struct EdfRecording {
  double sample_rate_hz = 0.0;
  Eigen::Index record_count = 0;
  double record_duration_s = 0.0;
  std::vector<EdfChannel> channels;
  std::vector<std::string> skipped_annotation_labels;
};

namespace detail {

inline std::string edf_field(const std::string& header, std::size_t offset, std::size_t len) {
  return std::string(trim(std::string_view(header).substr(offset, len)));
}

inline double edf_double(const std::string& header, std::size_t offset, std::size_t len,
                         const std::string& what, const std::filesystem::path& path) {
  const auto v = parse_double(edf_field(header, offset, len));
  if (!v.has_value())
    throw parse_error(path.string() + ": unparsable " + what + " at byte offset " +
                      std::to_string(offset));
  return *v;
}

inline long long edf_int(const std::string& header, std::size_t offset, std::size_t len,
                         const std::string& what, const std::filesystem::path& path) {
  const auto v = parse_int(edf_field(header, offset, len));
  if (!v.has_value())
    throw parse_error(path.string() + ": unparsable " + what + " at byte offset " +
                      std::to_string(offset));
  return *v;
}

inline bool edf_is_annotation_label(const std::string& label) {
  return label == "EDF Annotations";
}

}  // namespace detail

inline EdfRecording read_edf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open EDF file: " + path.string());

  std::string main_header(256, '\0');
  in.read(main_header.data(), 256);
  if (in.gcount() != 256) {
    throw parse_error(path.string() + ": truncated main header at byte offset " +
                      std::to_string(in.gcount()));
  }

  const std::string version = detail::edf_field(main_header, 0, 8);
  if (version != "0")
    throw unsupported_error(path.string() + ": unsupported EDF version field '" + version + "'");

  const long long declared_records = detail::edf_int(main_header, 236, 8, "record count", path);
  const double record_duration = detail::edf_double(main_header, 244, 8, "record duration", path);
  const long long num_signals = detail::edf_int(main_header, 252, 4, "signal count", path);
  if (num_signals < 1) throw parse_error(path.string() + ": signal count must be >= 1");
  if (!(record_duration > 0.0))
    throw parse_error(path.string() + ": record duration must be positive");

  const std::size_t ns = static_cast<std::size_t>(num_signals);
  std::string signal_header(256 * ns, '\0');
  in.read(signal_header.data(), static_cast<std::streamsize>(signal_header.size()));
  if (in.gcount() != static_cast<std::streamsize>(signal_header.size())) {
    throw parse_error(path.string() + ": truncated signal headers at byte offset " +
                      std::to_string(256 + in.gcount()));
  }

  // Signal headers are field-major: all labels, then all transducers, ...
  struct SignalMeta {
    std::string label, dim;
    double phys_min, phys_max;
    long long dig_min, dig_max;
    long long samples_per_record;
    bool annotation;
  };
  std::vector<SignalMeta> meta(ns);
  std::size_t off = 0;
  for (std::size_t s = 0; s < ns; ++s, off += 16)
    meta[s].label = detail::edf_field(signal_header, off, 16);
  off = ns * 16 + ns * 80;  // skip transducer fields
  for (std::size_t s = 0; s < ns; ++s, off += 8)
    meta[s].dim = detail::edf_field(signal_header, off, 8);
  for (std::size_t s = 0; s < ns; ++s, off += 8)
    meta[s].phys_min = detail::edf_double(signal_header, off, 8, "physical minimum", path);
  for (std::size_t s = 0; s < ns; ++s, off += 8)
    meta[s].phys_max = detail::edf_double(signal_header, off, 8, "physical maximum", path);
  for (std::size_t s = 0; s < ns; ++s, off += 8)
    meta[s].dig_min = detail::edf_int(signal_header, off, 8, "digital minimum", path);
  for (std::size_t s = 0; s < ns; ++s, off += 8)
    meta[s].dig_max = detail::edf_int(signal_header, off, 8, "digital maximum", path);
  off += ns * 80;  // skip prefiltering fields
  for (std::size_t s = 0; s < ns; ++s, off += 8) {
    meta[s].samples_per_record =
        detail::edf_int(signal_header, off, 8, "samples per record", path);
    if (meta[s].samples_per_record < 1)
      throw parse_error(path.string() + ": samples per record must be >= 1 for signal " +
                        std::to_string(s));
  }
  for (std::size_t s = 0; s < ns; ++s) meta[s].annotation = detail::edf_is_annotation_label(meta[s].label);

  EdfRecording rec;
  rec.record_duration_s = record_duration;

  Eigen::Index shared_spr = -1;
  for (std::size_t s = 0; s < ns; ++s) {
    if (meta[s].annotation) {
      rec.skipped_annotation_labels.push_back(meta[s].label);
      continue;
    }
    if (meta[s].dig_max == meta[s].dig_min) {
      throw numeric_error(path.string() + ": degenerate scaling for signal '" + meta[s].label +
                          "' (digital min equals digital max)");
    }
    if (shared_spr < 0) {
      shared_spr = static_cast<Eigen::Index>(meta[s].samples_per_record);
    } else if (shared_spr != static_cast<Eigen::Index>(meta[s].samples_per_record)) {
      throw unsupported_error(path.string() +
                              ": mixed sampling rates across signals are not supported");
    }
  }
  if (shared_spr < 0) throw empty_input_error(path.string() + ": no ordinary signals");
  rec.sample_rate_hz = static_cast<double>(shared_spr) / record_duration;

  std::size_t record_bytes = 0;
  for (std::size_t s = 0; s < ns; ++s)
    record_bytes += 2 * static_cast<std::size_t>(meta[s].samples_per_record);

  long long record_count = declared_records;
  const std::size_t header_bytes = 256 + 256 * ns;
  if (record_count < 0) {
    // Unknown record count: derive it from the file size.
    const auto file_size = std::filesystem::file_size(path);
    if (file_size < header_bytes || (file_size - header_bytes) % record_bytes != 0) {
      throw parse_error(path.string() + ": data region size is not a whole number of records");
    }
    record_count = static_cast<long long>((file_size - header_bytes) / record_bytes);
  }
  rec.record_count = static_cast<Eigen::Index>(record_count);

  std::vector<std::size_t> out_index(ns, SIZE_MAX);
  for (std::size_t s = 0; s < ns; ++s) {
    if (meta[s].annotation) continue;
    EdfChannel ch;
    ch.label = meta[s].label;
    ch.physical_dimension = meta[s].dim;
    ch.physical_min = meta[s].phys_min;
    ch.physical_max = meta[s].phys_max;
    ch.digital_min = static_cast<int>(meta[s].dig_min);
    ch.digital_max = static_cast<int>(meta[s].dig_max);
    ch.samples_per_record = static_cast<Eigen::Index>(meta[s].samples_per_record);
    ch.samples.resize(rec.record_count * ch.samples_per_record);
    out_index[s] = rec.channels.size();
    rec.channels.push_back(std::move(ch));
  }

  std::vector<char> raw;
  std::size_t byte_cursor = header_bytes;
  for (long long r = 0; r < record_count; ++r) {
    for (std::size_t s = 0; s < ns; ++s) {
      const std::size_t count = static_cast<std::size_t>(meta[s].samples_per_record);
      raw.resize(2 * count);
      in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
      if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw parse_error(path.string() + ": truncated data record at byte offset " +
                          std::to_string(byte_cursor + static_cast<std::size_t>(in.gcount())));
      }
      byte_cursor += raw.size();
      if (meta[s].annotation) continue;
      EdfChannel& ch = rec.channels[out_index[s]];
      const double span = static_cast<double>(meta[s].dig_max - meta[s].dig_min);
      const double gain = (ch.physical_max - ch.physical_min) / span;
      const Eigen::Index base = static_cast<Eigen::Index>(r) * ch.samples_per_record;
      for (std::size_t k = 0; k < count; ++k) {
        const auto lo = static_cast<std::uint8_t>(raw[2 * k]);
        const auto hi = static_cast<std::uint8_t>(raw[2 * k + 1]);
        const auto digital = static_cast<std::int16_t>(
            static_cast<std::uint16_t>(lo | (static_cast<std::uint16_t>(hi) << 8)));
        ch.samples[base + static_cast<Eigen::Index>(k)] =
            ch.physical_min + (static_cast<double>(digital) - static_cast<double>(ch.digital_min)) * gain;
      }
    }
  }
  return rec;
}

}  // namespace corecsp
