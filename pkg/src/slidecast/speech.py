"""Text-to-speech backends and bit-exact WAV persistence.

All audio in the pipeline is mono 24 kHz 16-bit PCM; backends producing any
other format are rejected rather than resampled.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import requests

from .errors import BackendFailure, EmptyScript, FormatMismatch, SinkFailure
from .narrator import NarrationScript, SpeechRateModel, estimate_duration

SAMPLE_RATE = 24_000
BIT_DEPTH = 16
CHANNELS = 1
BYTES_PER_SAMPLE = BIT_DEPTH // 8


@dataclass(frozen=True)
class VoiceConfig:
    voice_id: str = "default"
    language: str = "en"
    speaking_rate_multiplier: float = 1.0

    def __post_init__(self):
        if not 0.5 <= self.speaking_rate_multiplier <= 2.0:
            raise ValueError(f"speaking_rate_multiplier {self.speaking_rate_multiplier} "
                             f"outside [0.5, 2.0]")


@dataclass(frozen=True)
class AudioTrack:
    slide_index: int
    samples: bytes                   # signed 16-bit little-endian PCM
    sample_rate: int = SAMPLE_RATE
    bit_depth: int = BIT_DEPTH
    channels: int = CHANNELS

    @property
    def sample_count(self) -> int:
        return len(self.samples) // BYTES_PER_SAMPLE

    @property
    def duration_s(self) -> float:
        return self.sample_count / self.sample_rate


class HttpTtsBackend:
    """Speaks the gateway HTTP convention: JSON request in, WAV bytes out."""

    def __init__(self, endpoint: str, timeout_s: float = 120.0) -> None:
        self.endpoint = endpoint
        self.timeout_s = timeout_s

    def synthesize_wav(self, text: str, voice: VoiceConfig) -> bytes:
        body = {"text": text, "voice_id": voice.voice_id, "language": voice.language,
                "rate_multiplier": voice.speaking_rate_multiplier}
        try:
            resp = requests.post(self.endpoint, json=body, timeout=self.timeout_s)
        except requests.RequestException as exc:
            raise BackendFailure(f"tts transport error: {exc}") from exc
        if resp.status_code != 200:
            raise BackendFailure(f"tts backend returned HTTP {resp.status_code}")
        return resp.content


class MockTtsBackend:
    """Deterministic offline backend: silence whose length matches the estimate."""

    def __init__(self, rate: SpeechRateModel | None = None) -> None:
        self.rate = rate or SpeechRateModel()

    def synthesize_wav(self, text: str, voice: VoiceConfig) -> bytes:
        track = _silence_track(0, text, self.rate)
        sink = io.BytesIO()
        write_wav(track, sink)
        return sink.getvalue()


def synthesize(script: NarrationScript, backend, voice: VoiceConfig) -> AudioTrack:
    """Run a script through a backend and validate the audio contract."""
    if not script.text.strip():
        raise EmptyScript(f"slide {script.slide_index} has an empty narration script")
    wav_bytes = backend.synthesize_wav(script.text, voice)
    rate, depth, channels, samples = read_wav(io.BytesIO(wav_bytes))
    if (rate, depth, channels) != (SAMPLE_RATE, BIT_DEPTH, CHANNELS):
        raise FormatMismatch(
            f"backend produced {rate} Hz / {depth}-bit / {channels}ch, "
            f"required {SAMPLE_RATE} Hz / {BIT_DEPTH}-bit / mono")
    return AudioTrack(slide_index=script.slide_index, samples=samples)


def mock_synthesize(script: NarrationScript, rate: SpeechRateModel) -> AudioTrack:
    """Silence of exactly the estimated duration, rounded to the nearest sample."""
    return _silence_track(script.slide_index, script.text, rate)


def write_wav(track: AudioTrack, sink) -> int:
    """Emit a canonical RIFF/WAVE PCM file; returns bytes written."""
    data = track.samples
    byte_rate = track.sample_rate * track.channels * BYTES_PER_SAMPLE
    block_align = track.channels * BYTES_PER_SAMPLE
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(data), b"WAVE",
        b"fmt ", 16, 1, track.channels, track.sample_rate,
        byte_rate, block_align, track.bit_depth,
        b"data", len(data))
    try:
        sink.write(header)
        sink.write(data)
    except OSError as exc:
        raise SinkFailure(f"could not write wav: {exc}") from exc
    return len(header) + len(data)


def read_wav(source) -> tuple[int, int, int, bytes]:
    """Parse a PCM WAV stream; returns (sample_rate, bit_depth, channels, data)."""
    blob = source.read()
    if len(blob) < 12 or blob[0:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise FormatMismatch("not a RIFF/WAVE stream")
    pos = 12
    fmt = None
    data = None
    while pos + 8 <= len(blob):
        chunk_id = blob[pos:pos + 4]
        (size,) = struct.unpack_from("<I", blob, pos + 4)
        body = blob[pos + 8:pos + 8 + size]
        if chunk_id == b"fmt ":
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            data = body
        pos += 8 + size + (size & 1)
    if fmt is None or data is None:
        raise FormatMismatch("missing fmt or data chunk")
    audio_format, channels, sample_rate, _byte_rate, _block_align, bit_depth = fmt
    if audio_format != 1:
        raise FormatMismatch(f"unsupported audio format {audio_format} (PCM only)")
    return sample_rate, bit_depth, channels, data


def _silence_track(index: int, text: str, rate: SpeechRateModel) -> AudioTrack:
    duration = estimate_duration(text, rate)
    n_samples = round(duration * SAMPLE_RATE)
    return AudioTrack(slide_index=index, samples=b"\x00" * (n_samples * BYTES_PER_SAMPLE))
