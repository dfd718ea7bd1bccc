use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use v2r_core::compositor::{ComposeConfig, Compositor};
use v2r_core::geometry::{dlt_homography, Homography, Point2};
use v2r_core::io::{
    frame_name, read_config, read_ppm, write_frame, write_manifest, Config, FeedParams, FeedSynth,
    QuadMotion, SceneParams, SceneSynth, SequenceReader,
};
use v2r_core::marker::{detect_markers, load_template, procedural_bank, MarkerTemplate};
use v2r_core::Error;

use crate::{BenchArgs, CalibrateArgs, ComposeArgs, DetectArgs, Failure, Preset, SynthArgs};

type Outcome = Result<(), Failure>;

/// Files and directories created by a command, removed again on failure.
#[derive(Default)]
struct Created {
    paths: Vec<PathBuf>,
    armed: bool,
}

impl Created {
    fn new() -> Self {
        Self { paths: Vec::new(), armed: true }
    }

    fn dir(&mut self, dir: &Path) -> anyhow::Result<()> {
        if !dir.exists() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            self.paths.push(dir.to_path_buf());
        }
        Ok(())
    }

    fn file(&mut self, path: &Path) {
        self.paths.push(path.to_path_buf());
    }

    fn keep(mut self) {
        self.armed = false;
    }
}

impl Drop for Created {
    fn drop(&mut self) {
        if !self.armed {
            return;
        }
        for p in self.paths.iter().rev() {
            if p.is_dir() {
                let _ = fs::remove_dir_all(p);
            } else {
                let _ = fs::remove_file(p);
            }
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, Failure> {
    let Some(path) = path else { return Ok(Config::default()) };
    match read_config(path) {
        Ok(c) => Ok(c),
        Err(e @ Error::Config(_)) => Err(Failure::Usage(format!("{}: {e}", path.display()))),
        Err(e) => Err(Failure::Op(e.into())),
    }
}

/// `class_<id>.ppm` (or `.pgm`) for every class of the configured mirrors,
/// else the procedural markers.
fn template_bank(cfg: &Config) -> anyhow::Result<Vec<MarkerTemplate>> {
    let c = &cfg.compose;
    let Some(dir) = &cfg.template_dir else {
        return Ok(procedural_bank(c.marker_side, c.mirrors)?);
    };
    (0..4 * c.mirrors)
        .map(|id| {
            let ppm = dir.join(format!("class_{id}.ppm"));
            let path = if ppm.exists() { ppm } else { dir.join(format!("class_{id}.pgm")) };
            load_template(&path, id).with_context(|| format!("loading template {}", path.display()))
        })
        .collect()
}

pub fn synth(a: &SynthArgs) -> Outcome {
    if a.frames == 0 {
        return Err(Failure::Usage("--frames must be at least 1".into()));
    }
    let (dw, dh) = match a.preset {
        Preset::Small => (320, 240),
        Preset::Default | Preset::Static => (640, 480),
    };
    let (w, h) = (a.width.unwrap_or(dw), a.height.unwrap_or(dh));
    let mut params = SceneParams::new(w, h, a.frames, a.seed);
    if let Preset::Static = a.preset {
        params.noise_sigma = 0.0;
        params.blur_sigma = 0.0;
        params.motion = QuadMotion::fixed(params.motion.base);
    }
    params.noise_sigma = a.noise.unwrap_or(params.noise_sigma);
    params.blur_sigma = a.blur.unwrap_or(params.blur_sigma);
    let scene = SceneSynth::new(params).map_err(|e| Failure::Usage(e.to_string()))?;
    let feed = FeedSynth::new(FeedParams::new(w, h, a.frames, a.seed)).map_err(|e| Failure::Usage(e.to_string()))?;

    let mut created = Created::new();
    let (scene_dir, feed_dir) = (a.out.join("scene"), a.out.join("feed"));
    created.dir(&a.out)?;
    created.dir(&scene_dir)?;
    created.dir(&feed_dir)?;
    let mut records = Vec::with_capacity(a.frames);
    for k in 0..a.frames {
        created.file(&scene_dir.join(frame_name(k)));
        write_frame(&scene.frame(k)?, &scene_dir, k)?;
        created.file(&feed_dir.join(frame_name(k)));
        write_frame(&feed.frame(k), &feed_dir, k)?;
        records.push(scene.record(k, feed.truth(k))?);
    }
    let manifest = a.out.join("manifest.txt");
    created.file(&manifest);
    write_manifest(&records, &manifest)?;
    created.keep();
    Ok(())
}

pub fn detect(a: &DetectArgs) -> Outcome {
    let cfg = load_config(a.config.as_deref())?;
    let bank = template_bank(&cfg)?;
    let reader = SequenceReader::open(&a.scene)?;
    let mut out = String::new();
    for k in 0..reader.len() {
        let frame = reader.read(k)?;
        let hits = detect_markers(&frame, &bank, &cfg.compose.detection)?;
        for hit in hits {
            writeln!(out, "{k} {} {:.4} {:.4} {:.6}", hit.class_id, hit.center.x, hit.center.y, hit.score).unwrap();
        }
    }
    let mut created = Created::new();
    created.file(&a.out);
    fs::write(&a.out, out).with_context(|| format!("writing {}", a.out.display()))?;
    created.keep();
    Ok(())
}

pub fn compose(a: &ComposeArgs) -> Outcome {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(path) = &a.rectify {
        cfg.compose.rectify = Some(read_homography_file(path)?);
    }
    let bank = template_bank(&cfg)?;
    let scene = SequenceReader::open(&a.scene)?;
    let feed = SequenceReader::open(&a.feed)?;
    if scene.is_empty() || feed.is_empty() {
        return Err(anyhow!("empty input: {} scene and {} feed frames", scene.len(), feed.len()).into());
    }
    let n = scene.len().min(feed.len());
    if scene.len() != feed.len() {
        eprintln!("warning: scene has {} frames, feed has {}; composing {n}", scene.len(), feed.len());
    }
    let feed0 = feed.read(0)?;
    let mut comp = Compositor::new(cfg.compose.clone(), bank, feed0.dims())?;
    if let Some(bg) = &cfg.background {
        let bg = read_ppm(bg).with_context(|| format!("reading background {}", bg.display()))?;
        comp.renderer.set_background(&bg)?;
    }

    let mut created = Created::new();
    created.dir(&a.out)?;
    let mut stats_text = String::new();
    let input = (0..n).map(|k| Ok((scene.read(k)?, feed.read(k)?)));
    let out_dir = a.out.clone();
    comp.run(input, true, |img, stats| {
        created.file(&out_dir.join(frame_name(stats.frame)));
        write_frame(&img, &out_dir, stats.frame)?;
        writeln!(stats_text, "{stats}").unwrap();
        Ok(())
    })
    ?;
    if let Some(path) = &a.stats {
        created.file(path);
        fs::write(path, stats_text).with_context(|| format!("writing {}", path.display()))?;
    }
    created.keep();
    Ok(())
}

fn read_homography_file(path: &Path) -> anyhow::Result<Homography> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let body: Vec<&str> = text.lines().map(|l| l.split('#').next().unwrap_or("")).collect();
    Homography::from_text(&body.join("\n")).with_context(|| format!("parsing {}", path.display()))
}

pub fn calibrate(a: &CalibrateArgs) -> Outcome {
    let text = fs::read_to_string(&a.pairs).with_context(|| format!("reading {}", a.pairs.display()))?;
    let (mut src, mut dst) = (Vec::new(), Vec::new());
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| anyhow!("{}:{}: expected four numbers", a.pairs.display(), n + 1))?;
        if v.len() != 4 {
            return Err(anyhow!("{}:{}: expected four numbers, got {}", a.pairs.display(), n + 1, v.len()).into());
        }
        src.push(Point2::new(v[0], v[1]));
        dst.push(Point2::new(v[2], v[3]));
    }
    if src.len() < 4 {
        return Err(anyhow!("need at least 4 correspondences, got {}", src.len()).into());
    }
    let h = dlt_homography(&src, &dst)?;
    let mut created = Created::new();
    created.file(&a.out);
    fs::write(&a.out, h.to_text()).with_context(|| format!("writing {}", a.out.display()))?;
    created.keep();
    Ok(())
}

/// Frames are synthesized outside the timed region; timing covers
/// `compose_frame` only, run sequentially.
pub fn bench(a: &BenchArgs) -> Outcome {
    if a.frames == 0 {
        return Err(Failure::Usage("--frames must be at least 1".into()));
    }
    let scene = SceneSynth::new(SceneParams::new(a.width, a.height, a.frames, a.seed))
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let feed_params = FeedParams::new(a.width, a.height, a.frames, a.seed);
    let feed = FeedSynth::new(feed_params).map_err(|e| Failure::Usage(e.to_string()))?;
    let cfg = ComposeConfig::default();
    let bank = procedural_bank(cfg.marker_side, cfg.mirrors)?;
    let mut comp = Compositor::new(cfg, bank, (a.width, a.height))?;

    let (mut elapsed, mut detect_ms, mut warp_ms, mut tracked) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    for k in 0..a.frames {
        let s = scene.frame(k)?;
        let f = feed.frame(k);
        let start = Instant::now();
        let (_, stats) = comp.compose_frame(&s, &f)?;
        elapsed += start.elapsed().as_secs_f64();
        detect_ms += stats.detect_ms;
        warp_ms += stats.warp_ms;
        tracked += (stats.tracks > 0) as usize;
    }
    let n = a.frames as f64;
    println!("fps={:.2}", n / elapsed);
    println!("frames={} size={}x{} tracked_frames={tracked}", a.frames, a.width, a.height);
    println!("detect_ms={:.3}", detect_ms / n);
    println!("warp_ms={:.3}", warp_ms / n);
    println!("total_ms={:.3}", elapsed * 1e3 / n);
    Ok(())
}
