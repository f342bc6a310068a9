// Minimal media tool backing the pipeline when no ffmpeg binary is around:
// probe / cut / extract-audio / gen over the system libav libraries.
//
// Exit codes: 0 ok, 1 processing error, 2 usage, 3 no audio track,
// 4 unreadable or undecodable input.

extern "C" {
#include <libavcodec/avcodec.h>
#include <libavformat/avformat.h>
#include <libavutil/imgutils.h>
#include <libavutil/opt.h>
#include <libswresample/swresample.h>
#include <libswscale/swscale.h>
}

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace {

struct Fail {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& message) { throw Fail{code, message}; }

std::string av_errstr(int err) {
  char buf[AV_ERROR_MAX_STRING_SIZE] = {};
  av_strerror(err, buf, sizeof(buf));
  return buf;
}

void check_av(int err, int code, const std::string& what) {
  if (err < 0) fail(code, what + ": " + av_errstr(err));
}

constexpr AVRational kMsBase{1, 1000};

// ---------------------------------------------------------------------------
// Shared wrappers

struct InputFile {
  AVFormatContext* fmt = nullptr;
  int video_index = -1;
  int audio_index = -1;
  AVCodecContext* video_dec = nullptr;
  AVCodecContext* audio_dec = nullptr;

  ~InputFile() {
    if (video_dec != nullptr) avcodec_free_context(&video_dec);
    if (audio_dec != nullptr) avcodec_free_context(&audio_dec);
    if (fmt != nullptr) avformat_close_input(&fmt);
  }
};

AVCodecContext* open_decoder(AVStream* stream) {
  const AVCodec* codec = avcodec_find_decoder(stream->codecpar->codec_id);
  if (codec == nullptr) fail(4, "no decoder for stream codec");
  AVCodecContext* ctx = avcodec_alloc_context3(codec);
  if (ctx == nullptr) fail(1, "cannot allocate decoder context");
  check_av(avcodec_parameters_to_context(ctx, stream->codecpar), 4, "decoder parameters");
  if (ctx->codec_type == AVMEDIA_TYPE_AUDIO && ctx->channel_layout == 0) {
    ctx->channel_layout = av_get_default_channel_layout(ctx->channels);
  }
  check_av(avcodec_open2(ctx, codec, nullptr), 4, "open decoder");
  return ctx;
}

void open_input(InputFile& in, const std::string& path, bool need_video_decoder,
                bool need_audio_decoder) {
  check_av(avformat_open_input(&in.fmt, path.c_str(), nullptr, nullptr), 4, "open " + path);
  check_av(avformat_find_stream_info(in.fmt, nullptr), 4, "read stream info of " + path);
  for (unsigned i = 0; i < in.fmt->nb_streams; ++i) {
    const AVMediaType type = in.fmt->streams[i]->codecpar->codec_type;
    if (type == AVMEDIA_TYPE_VIDEO && in.video_index < 0) in.video_index = static_cast<int>(i);
    if (type == AVMEDIA_TYPE_AUDIO && in.audio_index < 0) in.audio_index = static_cast<int>(i);
  }
  if (need_video_decoder && in.video_index >= 0) {
    in.video_dec = open_decoder(in.fmt->streams[in.video_index]);
  }
  if (need_audio_decoder && in.audio_index >= 0) {
    in.audio_dec = open_decoder(in.fmt->streams[in.audio_index]);
  }
}

struct OutputFile {
  AVFormatContext* fmt = nullptr;
  AVStream* video_stream = nullptr;
  AVStream* audio_stream = nullptr;
  AVCodecContext* video_enc = nullptr;
  AVCodecContext* audio_enc = nullptr;
  AVPacket* pkt = nullptr;

  ~OutputFile() {
    if (pkt != nullptr) av_packet_free(&pkt);
    if (video_enc != nullptr) avcodec_free_context(&video_enc);
    if (audio_enc != nullptr) avcodec_free_context(&audio_enc);
    if (fmt != nullptr) {
      if (fmt->pb != nullptr) avio_closep(&fmt->pb);
      avformat_free_context(fmt);
    }
  }
};

void open_output(OutputFile& out, const std::string& path) {
  check_av(avformat_alloc_output_context2(&out.fmt, nullptr, nullptr, path.c_str()), 1,
           "no muxer for " + path);
  out.pkt = av_packet_alloc();
  if (out.pkt == nullptr) fail(1, "cannot allocate packet");
}

void add_video_encoder(OutputFile& out, int width, int height, AVRational fps) {
  const AVCodec* codec = avcodec_find_encoder(AV_CODEC_ID_MJPEG);
  if (codec == nullptr) fail(1, "mjpeg encoder unavailable");
  AVCodecContext* enc = avcodec_alloc_context3(codec);
  if (enc == nullptr) fail(1, "cannot allocate video encoder");
  enc->width = width;
  enc->height = height;
  enc->pix_fmt = AV_PIX_FMT_YUVJ420P;
  enc->color_range = AVCOL_RANGE_JPEG;
  enc->time_base = av_inv_q(fps);
  enc->framerate = fps;
  enc->flags |= AV_CODEC_FLAG_QSCALE;
  enc->global_quality = 3 * FF_QP2LAMBDA;
  if ((out.fmt->oformat->flags & AVFMT_GLOBALHEADER) != 0) {
    enc->flags |= AV_CODEC_FLAG_GLOBAL_HEADER;
  }
  check_av(avcodec_open2(enc, codec, nullptr), 1, "open mjpeg encoder");

  AVStream* stream = avformat_new_stream(out.fmt, nullptr);
  if (stream == nullptr) fail(1, "cannot add video stream");
  check_av(avcodec_parameters_from_context(stream->codecpar, enc), 1, "video stream parameters");
  stream->time_base = enc->time_base;
  out.video_enc = enc;
  out.video_stream = stream;
}

void add_audio_encoder(OutputFile& out, int sample_rate, int channels) {
  const AVCodec* codec = avcodec_find_encoder(AV_CODEC_ID_PCM_S16LE);
  if (codec == nullptr) fail(1, "pcm_s16le encoder unavailable");
  AVCodecContext* enc = avcodec_alloc_context3(codec);
  if (enc == nullptr) fail(1, "cannot allocate audio encoder");
  enc->sample_fmt = AV_SAMPLE_FMT_S16;
  enc->sample_rate = sample_rate;
  enc->channels = channels;
  enc->channel_layout = av_get_default_channel_layout(channels);
  enc->time_base = AVRational{1, sample_rate};
  if ((out.fmt->oformat->flags & AVFMT_GLOBALHEADER) != 0) {
    enc->flags |= AV_CODEC_FLAG_GLOBAL_HEADER;
  }
  check_av(avcodec_open2(enc, codec, nullptr), 1, "open pcm encoder");

  AVStream* stream = avformat_new_stream(out.fmt, nullptr);
  if (stream == nullptr) fail(1, "cannot add audio stream");
  check_av(avcodec_parameters_from_context(stream->codecpar, enc), 1, "audio stream parameters");
  stream->time_base = enc->time_base;
  out.audio_enc = enc;
  out.audio_stream = stream;
}

void write_header(OutputFile& out, const std::string& path) {
  if ((out.fmt->oformat->flags & AVFMT_NOFILE) == 0) {
    check_av(avio_open(&out.fmt->pb, path.c_str(), AVIO_FLAG_WRITE), 1, "create " + path);
  }
  check_av(avformat_write_header(out.fmt, nullptr), 1, "write header of " + path);
}

/// Drains every pending packet of `enc` into the muxer. Pass frame=nullptr to
/// flush at end of stream.
void encode_frame(OutputFile& out, AVCodecContext* enc, AVStream* stream, AVFrame* frame) {
  check_av(avcodec_send_frame(enc, frame), 1, "send frame to encoder");
  for (;;) {
    const int ret = avcodec_receive_packet(enc, out.pkt);
    if (ret == AVERROR(EAGAIN) || ret == AVERROR_EOF) return;
    check_av(ret, 1, "receive packet from encoder");
    av_packet_rescale_ts(out.pkt, enc->time_base, stream->time_base);
    out.pkt->stream_index = stream->index;
    check_av(av_interleaved_write_frame(out.fmt, out.pkt), 1, "write packet");
  }
}

void finish_output(OutputFile& out) {
  if (out.video_enc != nullptr) encode_frame(out, out.video_enc, out.video_stream, nullptr);
  if (out.audio_enc != nullptr) encode_frame(out, out.audio_enc, out.audio_stream, nullptr);
  check_av(av_write_trailer(out.fmt), 1, "write trailer");
}

AVFrame* alloc_video_frame(int width, int height) {
  AVFrame* frame = av_frame_alloc();
  if (frame == nullptr) fail(1, "cannot allocate frame");
  frame->format = AV_PIX_FMT_YUVJ420P;
  frame->width = width;
  frame->height = height;
  frame->color_range = AVCOL_RANGE_JPEG;
  check_av(av_frame_get_buffer(frame, 0), 1, "allocate frame buffer");
  return frame;
}

AVFrame* alloc_audio_frame(int sample_rate, int channels, int nb_samples) {
  AVFrame* frame = av_frame_alloc();
  if (frame == nullptr) fail(1, "cannot allocate frame");
  frame->format = AV_SAMPLE_FMT_S16;
  frame->sample_rate = sample_rate;
  frame->channels = channels;
  frame->channel_layout = av_get_default_channel_layout(channels);
  frame->nb_samples = nb_samples;
  check_av(av_frame_get_buffer(frame, 0), 1, "allocate sample buffer");
  return frame;
}

// ---------------------------------------------------------------------------
// probe

double container_duration_s(const AVFormatContext* fmt) {
  if (fmt->duration != AV_NOPTS_VALUE && fmt->duration > 0) {
    return static_cast<double>(fmt->duration) / AV_TIME_BASE;
  }
  double best = 0.0;
  for (unsigned i = 0; i < fmt->nb_streams; ++i) {
    const AVStream* st = fmt->streams[i];
    if (st->duration != AV_NOPTS_VALUE && st->duration > 0) {
      best = std::max(best, static_cast<double>(st->duration) * av_q2d(st->time_base));
    }
  }
  return best;
}

int cmd_probe(const std::string& in_path) {
  InputFile in;
  open_input(in, in_path, false, false);
  const double duration = container_duration_s(in.fmt);
  if (!(duration > 0.0)) fail(4, "cannot determine duration of " + in_path);

  int width = 0;
  int height = 0;
  if (in.video_index >= 0) {
    width = in.fmt->streams[in.video_index]->codecpar->width;
    height = in.fmt->streams[in.video_index]->codecpar->height;
  }
  std::printf("{\"duration_s\":%.6f,\"has_audio\":%s,\"width\":%d,\"height\":%d}\n", duration,
              in.audio_index >= 0 ? "true" : "false", width, height);
  return 0;
}

// ---------------------------------------------------------------------------
// gen

void fill_test_pattern(AVFrame* frame, std::int64_t index) {
  check_av(av_frame_make_writable(frame), 1, "make frame writable");
  const int w = frame->width;
  const int h = frame->height;
  for (int y = 0; y < h; ++y) {
    std::uint8_t* row = frame->data[0] + y * frame->linesize[0];
    for (int x = 0; x < w; ++x) {
      row[x] = static_cast<std::uint8_t>(x + y + index * 3);
    }
  }
  for (int y = 0; y < h / 2; ++y) {
    std::uint8_t* u = frame->data[1] + y * frame->linesize[1];
    std::uint8_t* v = frame->data[2] + y * frame->linesize[2];
    for (int x = 0; x < w / 2; ++x) {
      u[x] = static_cast<std::uint8_t>(128 + ((x + index * 2) & 63));
      v[x] = static_cast<std::uint8_t>(64 + ((y + index) & 63));
    }
  }
}

void fill_tone(AVFrame* frame, std::int64_t first_sample, int sample_rate, bool silent) {
  check_av(av_frame_make_writable(frame), 1, "make frame writable");
  auto* samples = reinterpret_cast<std::int16_t*>(frame->data[0]);
  const int channels = frame->channels;
  for (int i = 0; i < frame->nb_samples; ++i) {
    std::int16_t value = 0;
    if (!silent) {
      const double t = static_cast<double>(first_sample + i) / sample_rate;
      value = static_cast<std::int16_t>(8000.0 * std::sin(2.0 * M_PI * 440.0 * t));
    }
    for (int c = 0; c < channels; ++c) samples[i * channels + c] = value;
  }
}

int cmd_gen(const std::string& out_path, double duration_s, int width, int height, int fps,
            bool with_audio, bool silent) {
  if (!(duration_s > 0.0)) fail(2, "--duration must be positive");
  if (width < 16 || height < 16 || width % 2 != 0 || height % 2 != 0) {
    fail(2, "--width/--height must be even and at least 16");
  }
  if (fps < 1 || fps > 120) fail(2, "--fps must lie in [1, 120]");

  constexpr int kSampleRate = 44100;
  constexpr int kChannels = 2;
  constexpr int kChunk = 1024;

  OutputFile out;
  open_output(out, out_path);
  add_video_encoder(out, width, height, AVRational{fps, 1});
  if (with_audio) add_audio_encoder(out, kSampleRate, kChannels);
  write_header(out, out_path);

  const std::int64_t n_frames = std::max<std::int64_t>(1, llround(duration_s * fps));
  const std::int64_t n_samples = with_audio ? llround(duration_s * kSampleRate) : 0;

  AVFrame* video = alloc_video_frame(width, height);
  AVFrame* audio = with_audio ? alloc_audio_frame(kSampleRate, kChannels, kChunk) : nullptr;

  // Interleave by presentation time so the muxer's buffer stays small.
  std::int64_t v_index = 0;
  std::int64_t a_sample = 0;
  while (v_index < n_frames || a_sample < n_samples) {
    const double v_t = static_cast<double>(v_index) / fps;
    const double a_t = static_cast<double>(a_sample) / kSampleRate;
    if (v_index < n_frames && (a_sample >= n_samples || v_t <= a_t)) {
      fill_test_pattern(video, v_index);
      video->pts = v_index;
      encode_frame(out, out.video_enc, out.video_stream, video);
      ++v_index;
    } else {
      const int chunk = static_cast<int>(std::min<std::int64_t>(kChunk, n_samples - a_sample));
      audio->nb_samples = chunk;
      fill_tone(audio, a_sample, kSampleRate, silent);
      audio->pts = a_sample;
      encode_frame(out, out.audio_enc, out.audio_stream, audio);
      a_sample += chunk;
    }
  }

  finish_output(out);
  av_frame_free(&video);
  if (audio != nullptr) av_frame_free(&audio);
  return 0;
}

// ---------------------------------------------------------------------------
// cut

AVRational input_frame_rate(AVFormatContext* fmt, AVStream* stream) {
  AVRational fps = av_guess_frame_rate(fmt, stream, nullptr);
  if (fps.num <= 0 || fps.den <= 0) fps = AVRational{25, 1};
  return fps;
}

/// Converts any decoded audio to packed s16 at the decoder's own rate and
/// layout, so window slicing can work in raw samples.
struct AudioNormalizer {
  SwrContext* swr = nullptr;
  int sample_rate = 0;
  int channels = 0;

  void init(const AVCodecContext* dec) {
    sample_rate = dec->sample_rate;
    channels = dec->channels;
    swr = swr_alloc_set_opts(nullptr, av_get_default_channel_layout(channels), AV_SAMPLE_FMT_S16,
                             sample_rate, static_cast<std::int64_t>(dec->channel_layout),
                             dec->sample_fmt, sample_rate, 0, nullptr);
    if (swr == nullptr || swr_init(swr) < 0) fail(1, "cannot initialize resampler");
  }

  ~AudioNormalizer() {
    if (swr != nullptr) swr_free(&swr);
  }
};

int cmd_cut(const std::string& in_path, const std::string& out_path, double start_s,
            double end_s) {
  if (!(end_s > start_s) || start_s < 0) fail(2, "--start/--end must satisfy 0 <= start < end");
  const std::int64_t start_ms = llround(start_s * 1000.0);
  const std::int64_t end_ms = llround(end_s * 1000.0);

  InputFile in;
  open_input(in, in_path, true, true);
  if (in.video_dec == nullptr) fail(4, "no video stream in " + in_path);
  AVStream* v_in = in.fmt->streams[in.video_index];
  AVStream* a_in = in.audio_index >= 0 ? in.fmt->streams[in.audio_index] : nullptr;
  const AVRational fps = input_frame_rate(in.fmt, v_in);

  OutputFile out;
  open_output(out, out_path);
  add_video_encoder(out, in.video_dec->width, in.video_dec->height, fps);
  AudioNormalizer audio_norm;
  if (in.audio_dec != nullptr) {
    audio_norm.init(in.audio_dec);
    add_audio_encoder(out, audio_norm.sample_rate, audio_norm.channels);
  }
  write_header(out, out_path);

  SwsContext* sws =
      sws_getContext(in.video_dec->width, in.video_dec->height, in.video_dec->pix_fmt,
                     in.video_dec->width, in.video_dec->height, AV_PIX_FMT_YUVJ420P, SWS_BILINEAR,
                     nullptr, nullptr, nullptr);
  if (sws == nullptr) fail(1, "cannot initialize scaler");

  AVFrame* decoded = av_frame_alloc();
  AVFrame* converted = alloc_video_frame(in.video_dec->width, in.video_dec->height);
  AVPacket* pkt = av_packet_alloc();
  if (decoded == nullptr || pkt == nullptr) fail(1, "cannot allocate demux buffers");

  const std::int64_t start_sample =
      in.audio_dec != nullptr
          ? av_rescale_q(start_ms, kMsBase, AVRational{1, audio_norm.sample_rate})
          : 0;
  const std::int64_t end_sample =
      in.audio_dec != nullptr
          ? av_rescale_q(end_ms, kMsBase, AVRational{1, audio_norm.sample_rate})
          : 0;

  std::int64_t v_out_index = 0;
  std::int64_t v_fallback_pts = 0;
  std::int64_t a_out_pos = 0;
  std::int64_t a_fallback_pos = 0;
  std::vector<std::uint8_t> resampled;

  auto handle_video = [&](AVFrame* frame) {
    std::int64_t pts = frame->best_effort_timestamp;
    if (pts == AV_NOPTS_VALUE) {
      pts = av_rescale_q(v_fallback_pts, av_inv_q(fps), v_in->time_base);
    }
    v_fallback_pts++;
    const bool inside = av_compare_ts(pts, v_in->time_base, start_ms, kMsBase) >= 0 &&
                        av_compare_ts(pts, v_in->time_base, end_ms, kMsBase) < 0;
    if (!inside) return;
    check_av(av_frame_make_writable(converted), 1, "make frame writable");
    sws_scale(sws, frame->data, frame->linesize, 0, frame->height, converted->data,
              converted->linesize);
    converted->pts = v_out_index++;
    encode_frame(out, out.video_enc, out.video_stream, converted);
  };

  auto handle_audio = [&](AVFrame* frame) {
    std::int64_t pos = frame->best_effort_timestamp;
    if (pos == AV_NOPTS_VALUE) {
      pos = a_fallback_pos;
    } else {
      pos = av_rescale_q(pos, a_in->time_base, AVRational{1, audio_norm.sample_rate});
    }
    a_fallback_pos = pos + frame->nb_samples;

    const int bytes_per_frame = 2 * audio_norm.channels;
    resampled.resize(static_cast<std::size_t>(frame->nb_samples) * bytes_per_frame);
    std::uint8_t* planes[1] = {resampled.data()};
    const int got = swr_convert(audio_norm.swr, planes, frame->nb_samples,
                                const_cast<const std::uint8_t**>(frame->extended_data),
                                frame->nb_samples);
    check_av(got, 1, "resample audio");

    const std::int64_t s0 = std::max<std::int64_t>(pos, start_sample);
    const std::int64_t s1 = std::min<std::int64_t>(pos + got, end_sample);
    if (s1 <= s0) return;
    const int keep = static_cast<int>(s1 - s0);
    AVFrame* slice = alloc_audio_frame(audio_norm.sample_rate, audio_norm.channels, keep);
    check_av(av_frame_make_writable(slice), 1, "make frame writable");
    std::memcpy(slice->data[0], resampled.data() + (s0 - pos) * bytes_per_frame,
                static_cast<std::size_t>(keep) * bytes_per_frame);
    slice->pts = a_out_pos;
    a_out_pos += keep;
    encode_frame(out, out.audio_enc, out.audio_stream, slice);
    av_frame_free(&slice);
  };

  auto drain_decoder = [&](AVCodecContext* dec, const auto& handler) {
    for (;;) {
      const int ret = avcodec_receive_frame(dec, decoded);
      if (ret == AVERROR(EAGAIN) || ret == AVERROR_EOF) return;
      check_av(ret, 4, "decode frame");
      handler(decoded);
      av_frame_unref(decoded);
    }
  };

  for (;;) {
    const int ret = av_read_frame(in.fmt, pkt);
    if (ret == AVERROR_EOF) break;
    check_av(ret, 4, "read packet");
    if (pkt->stream_index == in.video_index) {
      check_av(avcodec_send_packet(in.video_dec, pkt), 4, "send video packet");
      drain_decoder(in.video_dec, handle_video);
    } else if (in.audio_dec != nullptr && pkt->stream_index == in.audio_index) {
      check_av(avcodec_send_packet(in.audio_dec, pkt), 4, "send audio packet");
      drain_decoder(in.audio_dec, handle_audio);
    }
    av_packet_unref(pkt);
  }
  check_av(avcodec_send_packet(in.video_dec, nullptr), 4, "flush video decoder");
  drain_decoder(in.video_dec, handle_video);
  if (in.audio_dec != nullptr) {
    check_av(avcodec_send_packet(in.audio_dec, nullptr), 4, "flush audio decoder");
    drain_decoder(in.audio_dec, handle_audio);
  }

  if (v_out_index == 0) fail(1, "window contains no frames of " + in_path);
  finish_output(out);

  av_frame_free(&decoded);
  av_frame_free(&converted);
  av_packet_free(&pkt);
  sws_freeContext(sws);
  return 0;
}

// ---------------------------------------------------------------------------
// extract-audio

int cmd_extract_audio(const std::string& in_path, const std::string& out_path, int rate,
                      int channels) {
  if (rate < 8000 || rate > 192000) fail(2, "--rate must lie in [8000, 192000]");
  if (channels < 1 || channels > 2) fail(2, "--channels must be 1 or 2");

  InputFile in;
  open_input(in, in_path, false, true);
  if (in.audio_dec == nullptr) fail(3, "no audio track in " + in_path);

  OutputFile out;
  open_output(out, out_path);
  add_audio_encoder(out, rate, channels);
  write_header(out, out_path);

  SwrContext* swr = swr_alloc_set_opts(
      nullptr, av_get_default_channel_layout(channels), AV_SAMPLE_FMT_S16, rate,
      static_cast<std::int64_t>(in.audio_dec->channel_layout), in.audio_dec->sample_fmt,
      in.audio_dec->sample_rate, 0, nullptr);
  if (swr == nullptr || swr_init(swr) < 0) fail(1, "cannot initialize resampler");

  AVFrame* decoded = av_frame_alloc();
  AVPacket* pkt = av_packet_alloc();
  if (decoded == nullptr || pkt == nullptr) fail(1, "cannot allocate demux buffers");
  std::int64_t out_pos = 0;

  auto convert_and_write = [&](const AVFrame* frame) {
    const int in_samples = frame != nullptr ? frame->nb_samples : 0;
    const int cap = static_cast<int>(av_rescale_rnd(
        swr_get_delay(swr, in.audio_dec->sample_rate) + in_samples, rate,
        in.audio_dec->sample_rate, AV_ROUND_UP)) + 64;
    AVFrame* chunk = alloc_audio_frame(rate, channels, cap);
    check_av(av_frame_make_writable(chunk), 1, "make frame writable");
    const int got = swr_convert(
        swr, chunk->data, cap,
        frame != nullptr ? const_cast<const std::uint8_t**>(frame->extended_data) : nullptr,
        in_samples);
    check_av(got, 1, "resample audio");
    if (got > 0) {
      chunk->nb_samples = got;
      chunk->pts = out_pos;
      out_pos += got;
      encode_frame(out, out.audio_enc, out.audio_stream, chunk);
    }
    av_frame_free(&chunk);
  };

  for (;;) {
    const int ret = av_read_frame(in.fmt, pkt);
    if (ret == AVERROR_EOF) break;
    check_av(ret, 4, "read packet");
    if (pkt->stream_index == in.audio_index) {
      check_av(avcodec_send_packet(in.audio_dec, pkt), 4, "send audio packet");
      for (;;) {
        const int dret = avcodec_receive_frame(in.audio_dec, decoded);
        if (dret == AVERROR(EAGAIN) || dret == AVERROR_EOF) break;
        check_av(dret, 4, "decode frame");
        convert_and_write(decoded);
        av_frame_unref(decoded);
      }
    }
    av_packet_unref(pkt);
  }
  check_av(avcodec_send_packet(in.audio_dec, nullptr), 4, "flush audio decoder");
  for (;;) {
    const int dret = avcodec_receive_frame(in.audio_dec, decoded);
    if (dret == AVERROR(EAGAIN) || dret == AVERROR_EOF) break;
    check_av(dret, 4, "decode frame");
    convert_and_write(decoded);
    av_frame_unref(decoded);
  }
  convert_and_write(nullptr);  // drain the resampler

  if (out_pos == 0) fail(3, "audio track of " + in_path + " holds no samples");
  finish_output(out);

  av_frame_free(&decoded);
  av_packet_free(&pkt);
  swr_free(&swr);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  av_log_set_level(AV_LOG_ERROR);

  CLI::App app{"probe / cut / extract-audio / gen on top of the system libav"};
  app.require_subcommand(1);

  std::string in_path;
  std::string out_path;
  double start_s = 0.0;
  double end_s = 0.0;
  double duration_s = 10.0;
  int width = 320;
  int height = 240;
  int fps = 25;
  int rate = 16000;
  int channels = 1;
  bool with_audio = false;
  bool silent = false;

  CLI::App* probe = app.add_subcommand("probe", "print duration and stream layout as JSON");
  probe->add_option("--in", in_path, "input media file")->required();

  CLI::App* cut = app.add_subcommand("cut", "re-encode a [start,end) window into a new file");
  cut->add_option("--in", in_path, "input media file")->required();
  cut->add_option("--out", out_path, "output media file")->required();
  cut->add_option("--start", start_s, "window start in seconds")->required();
  cut->add_option("--end", end_s, "window end in seconds")->required();

  CLI::App* extract = app.add_subcommand("extract-audio", "write the audio track as PCM WAV");
  extract->add_option("--in", in_path, "input media file")->required();
  extract->add_option("--out", out_path, "output WAV file")->required();
  extract->add_option("--rate", rate, "output sample rate");
  extract->add_option("--channels", channels, "output channel count");

  CLI::App* gen = app.add_subcommand("gen", "synthesize a test-pattern video");
  gen->add_option("--out", out_path, "output media file")->required();
  gen->add_option("--duration", duration_s, "duration in seconds")->required();
  gen->add_option("--width", width, "frame width");
  gen->add_option("--height", height, "frame height");
  gen->add_option("--fps", fps, "frame rate");
  gen->add_flag("--audio", with_audio, "add a 440 Hz stereo tone track");
  gen->add_flag("--silent", silent, "make the audio track silent");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (probe->parsed()) return cmd_probe(in_path);
    if (cut->parsed()) return cmd_cut(in_path, out_path, start_s, end_s);
    if (extract->parsed()) return cmd_extract_audio(in_path, out_path, rate, channels);
    if (gen->parsed()) return cmd_gen(out_path, duration_s, width, height, fps, with_audio, silent);
  } catch (const Fail& f) {
    std::fprintf(stderr, "avtool: %s\n", f.message.c_str());
    return f.code;
  }
  return 2;
}
