"""Timeline construction, video composition, and caption emission.

Timeline arithmetic is exact (rational numbers); floats appear only at the
serialization boundary. Each slide is shown for exactly the duration of its
audio track, and fades are rendered inside the slide's own interval so the
video length always equals the summed audio length.
"""

from __future__ import annotations

import json
import logging
import shutil
import subprocess
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .errors import (CountMismatch, DurationMismatch, MuxerFailure,
                     ZeroDurationTrack)
from .narrator import NarrationScript
from .render import SlideFrame
from .slidecomp import sentences
from .speech import AudioTrack

logger = logging.getLogger(__name__)

DURATION_TOLERANCE_S = 0.2


@dataclass(frozen=True)
class TransitionConfig:
    kind: str = "fade"               # fade | cut
    duration_s: float = 0.3


@dataclass(frozen=True)
class OutputConfig:
    width: int = 1920
    height: int = 1080
    fps: int = 30


@dataclass(frozen=True)
class TimelineEntry:
    slide_index: int
    start: Fraction                  # seconds
    end: Fraction
    frame_path: str
    audio_path: str
    transition: TransitionConfig

    def to_dict(self) -> dict:
        return {"slide_index": self.slide_index,
                "start_s": float(self.start), "end_s": float(self.end),
                "frame_path": self.frame_path, "audio_path": self.audio_path,
                "transition": {"kind": self.transition.kind,
                               "duration_s": self.transition.duration_s}}


@dataclass(frozen=True)
class Timeline:
    entries: tuple[TimelineEntry, ...]

    @property
    def total_s(self) -> Fraction:
        return self.entries[-1].end if self.entries else Fraction(0)

    def to_dict(self) -> dict:
        return {"total_duration_s": float(self.total_s),
                "entries": [e.to_dict() for e in self.entries]}


@dataclass(frozen=True)
class VideoArtifact:
    path: str
    width: int
    height: int
    fps: float
    total_duration_s: float


def build_timeline(frames: list[SlideFrame], tracks: list[AudioTrack],
                   transitions: TransitionConfig | None = None,
                   frame_paths: list[str] | None = None,
                   audio_paths: list[str] | None = None) -> Timeline:
    """Contiguous entries starting at 0, one per slide, exact durations."""
    if len(frames) != len(tracks):
        raise CountMismatch(f"{len(frames)} frames but {len(tracks)} audio tracks")
    transitions = transitions or TransitionConfig()
    frame_paths = frame_paths or [f"slides/slide_{f.slide_index}.png" for f in frames]
    audio_paths = audio_paths or [f"audio/slide_{t.slide_index}.wav" for t in tracks]

    entries: list[TimelineEntry] = []
    cursor = Fraction(0)
    for frame, track, fpath, apath in zip(frames, tracks, frame_paths, audio_paths):
        duration = Fraction(track.sample_count, track.sample_rate)
        if duration == 0:
            raise ZeroDurationTrack(f"slide {track.slide_index} audio has zero duration")
        entries.append(TimelineEntry(slide_index=frame.slide_index,
                                     start=cursor, end=cursor + duration,
                                     frame_path=fpath, audio_path=apath,
                                     transition=transitions))
        cursor += duration
    return Timeline(entries=tuple(entries))


def compose_video(timeline: Timeline, cfg: OutputConfig, muxer,
                  run_dir: str | Path, out_name: str = "video.mp4") -> VideoArtifact:
    """Mux the timeline into an MP4 and verify the probed contract."""
    run_dir = Path(run_dir)
    for entry in timeline.entries:
        for rel in (entry.frame_path, entry.audio_path):
            if not (run_dir / rel).is_file():
                raise MuxerFailure(f"missing timeline input: {rel}")

    out_path = run_dir / out_name
    muxer.compose(timeline, cfg, run_dir, out_path)

    duration, width, height, fps = probe_video(out_path)
    if (width, height) != (cfg.width, cfg.height):
        raise DurationMismatch(f"probed {width}x{height}, expected "
                               f"{cfg.width}x{cfg.height}")
    expected = float(timeline.total_s)
    if abs(duration - expected) > DURATION_TOLERANCE_S:
        raise DurationMismatch(f"probed duration {duration:.3f} s, expected "
                               f"{expected:.3f} ± {DURATION_TOLERANCE_S} s")
    return VideoArtifact(path=str(out_path), width=width, height=height,
                         fps=fps, total_duration_s=duration)


def probe_video(path: str | Path) -> tuple[float, int, int, float]:
    """(duration_s, width, height, fps); ffprobe when present, OpenCV otherwise."""
    path = str(path)
    ffprobe = shutil.which("ffprobe")
    if ffprobe:
        proc = subprocess.run(
            [ffprobe, "-v", "error", "-select_streams", "v:0",
             "-show_entries", "stream=width,height,avg_frame_rate",
             "-show_entries", "format=duration", "-of", "json", path],
            capture_output=True, text=True)
        if proc.returncode == 0:
            info = json.loads(proc.stdout)
            stream = info["streams"][0]
            num, den = stream["avg_frame_rate"].split("/")
            return (float(info["format"]["duration"]), int(stream["width"]),
                    int(stream["height"]), float(num) / float(den))
        logger.warning("ffprobe failed (%s); falling back to OpenCV probe",
                       proc.stderr.strip()[:200])

    import cv2
    cap = cv2.VideoCapture(path)
    try:
        if not cap.isOpened():
            raise MuxerFailure(f"cannot open video for probing: {path}")
        width = int(cap.get(cv2.CAP_PROP_FRAME_WIDTH))
        height = int(cap.get(cv2.CAP_PROP_FRAME_HEIGHT))
        fps = cap.get(cv2.CAP_PROP_FPS)
        frames = cap.get(cv2.CAP_PROP_FRAME_COUNT)
        return frames / fps if fps else 0.0, width, height, fps
    finally:
        cap.release()


class FfmpegMuxer:
    """External frame-accurate muxer driven through a persisted instruction script."""

    def __init__(self, executable: str = "ffmpeg") -> None:
        self.executable = executable

    def compose(self, timeline: Timeline, cfg: OutputConfig,
                run_dir: Path, out_path: Path) -> None:
        video_script = run_dir / "mux_video.ffconcat"
        audio_script = run_dir / "mux_audio.ffconcat"
        lines = ["ffconcat version 1.0"]
        for e in timeline.entries:
            lines += [f"file '{e.frame_path}'", f"duration {float(e.end - e.start):.6f}"]
        lines.append(f"file '{timeline.entries[-1].frame_path}'")  # concat quirk: hold last frame
        video_script.write_text("\n".join(lines) + "\n", encoding="utf-8")
        audio_script.write_text(
            "ffconcat version 1.0\n"
            + "\n".join(f"file '{e.audio_path}'" for e in timeline.entries) + "\n",
            encoding="utf-8")

        cmd = [self.executable, "-y",
               "-f", "concat", "-safe", "0", "-i", video_script.name,
               "-f", "concat", "-safe", "0", "-i", audio_script.name,
               "-vf", f"scale={cfg.width}:{cfg.height},fps={cfg.fps},format=yuv420p",
               "-t", f"{float(timeline.total_s):.6f}",
               "-c:v", "libx264", "-c:a", "aac", "-shortest", str(out_path)]
        (run_dir / "mux_command.txt").write_text(" ".join(cmd) + "\n", encoding="utf-8")
        try:
            proc = subprocess.run(cmd, cwd=run_dir, capture_output=True, timeout=600)
        except FileNotFoundError as exc:
            raise MuxerFailure(f"muxer executable not found: {self.executable}") from exc
        if proc.returncode != 0:
            raise MuxerFailure(f"muxer exited {proc.returncode}: "
                               f"{proc.stderr.decode('utf-8', errors='replace')[-800:]}")


class InternalMuxer:
    """OpenCV fallback: frame-accurate video with in-interval fades, no audio
    stream (reduced fidelity, used when no external muxer is installed)."""

    def compose(self, timeline: Timeline, cfg: OutputConfig,
                run_dir: Path, out_path: Path) -> None:
        import cv2
        import numpy as np

        writer = cv2.VideoWriter(str(out_path),
                                 cv2.VideoWriter_fourcc(*"mp4v"),
                                 cfg.fps, (cfg.width, cfg.height))
        if not writer.isOpened():
            raise MuxerFailure("OpenCV VideoWriter could not open output")
        try:
            for entry in timeline.entries:
                img = cv2.imread(str(run_dir / entry.frame_path))
                if img is None:
                    raise MuxerFailure(f"cannot read frame {entry.frame_path}")
                if img.shape[:2] != (cfg.height, cfg.width):
                    img = cv2.resize(img, (cfg.width, cfg.height))
                start_f = round(entry.start * cfg.fps)
                end_f = round(entry.end * cfg.fps)
                n = end_f - start_f
                fade_n = 0
                if entry.transition.kind == "fade":
                    fade_n = min(int(entry.transition.duration_s * cfg.fps), n // 2)
                for i in range(n):
                    scale = 1.0
                    if fade_n:
                        if i < fade_n:
                            scale = (i + 1) / (fade_n + 1)
                        elif i >= n - fade_n:
                            scale = (n - i) / (fade_n + 1)
                    frame = img if scale == 1.0 else (img * scale).astype(np.uint8)
                    writer.write(frame)
        finally:
            writer.release()


def default_muxer():
    if shutil.which("ffmpeg"):
        return FfmpegMuxer()
    logger.warning("no ffmpeg on PATH; using the internal video-only muxer")
    return InternalMuxer()


def emit_captions(timeline: Timeline, scripts: list[NarrationScript]) -> str:
    """SRT captions: slide intervals split among sentences by character share."""
    if len(scripts) != len(timeline.entries):
        raise CountMismatch(f"{len(scripts)} scripts but "
                            f"{len(timeline.entries)} timeline entries")
    cues: list[str] = []
    index = 1
    for entry, script in zip(timeline.entries, scripts):
        sents = sentences(script.text)
        if not sents:
            continue
        total_chars = sum(len(s) for s in sents)
        cursor = entry.start
        span = entry.end - entry.start
        for i, sent in enumerate(sents):
            if i == len(sents) - 1:
                cue_end = entry.end   # absorb rounding into the last cue
            else:
                cue_end = cursor + span * Fraction(len(sent), total_chars)
            cues.append(f"{index}\n{format_srt_time(cursor)} --> "
                        f"{format_srt_time(cue_end)}\n{sent}\n")
            cursor = cue_end
            index += 1
    return "\n".join(cues)


def format_srt_time(seconds: Fraction | float) -> str:
    ms_total = round(Fraction(seconds) * 1000)
    ms = ms_total % 1000
    s = (ms_total // 1000) % 60
    m = (ms_total // 60_000) % 60
    h = ms_total // 3_600_000
    return f"{h:02d}:{m:02d}:{s:02d},{ms:03d}"
