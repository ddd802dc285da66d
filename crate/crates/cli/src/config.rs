//! Pipeline configuration with three layers: command-line flags beat
//! environment variables beat the config file, and anything still unset
//! falls back to a built-in default. Flags and environment variables
//! arrive already merged (the argument parser reads the variables), so
//! this module only layers them over the file.
//!
//! The config file uses the same line grammar as the robot profile and
//! mapping files: `keyword value`, `#` comments. Relative paths in the
//! file resolve against the file's own directory, so a config can ship
//! next to the assets it names.

use crate::errors::CliError;
use crate::fsio::read_file;
use gesturebot::bvh::{parse_mapping, ChannelMapping};
use gesturebot::gsd::{ExemplarPolicy, PromptTemplate};
use gesturebot::llm::{Backend, BackendConfig, HttpBackend, MockBackend, DEFAULT_CONCURRENCY};
use gesturebot::motion::RobotProfile;
use gesturebot::pose::DEFAULT_SPEED_SCALE;
use gesturebot::textcfg;
use std::path::{Path, PathBuf};
use std::time::Duration;

pub const DEFAULT_DOWNSAMPLE_FACTOR: usize = 12;
const DEFAULT_OUT_DIR: &str = "out";

/// Settings that may arrive as flags or environment variables. Every
/// field is optional; unset means "defer to the config file".
#[derive(Debug, Default, clap::Args)]
pub struct Overrides {
    /// Pipeline config file (`keyword value` lines, `#` comments).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Generation endpoint URL.
    #[arg(long, global = true, env = "GESTUREBOT_ENDPOINT", value_name = "URL")]
    pub endpoint: Option<String>,

    /// Model name sent to the generation server.
    #[arg(long, global = true, env = "GESTUREBOT_MODEL", value_name = "NAME")]
    pub model: Option<String>,

    /// Directory that receives output artifacts.
    #[arg(long, global = true, env = "GESTUREBOT_OUT_DIR", value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Maximum in-flight generation requests.
    #[arg(
        long,
        global = true,
        env = "GESTUREBOT_CONCURRENCY",
        value_name = "N"
    )]
    pub concurrency: Option<usize>,

    /// Prompt template file; omit to use the built-in template.
    #[arg(long, global = true, value_name = "FILE")]
    pub template: Option<PathBuf>,

    /// Robot profile file (joint names, limits, velocity caps).
    #[arg(long, global = true, value_name = "FILE")]
    pub profile: Option<PathBuf>,

    /// Mocap channel mapping file.
    #[arg(long, global = true, visible_alias = "map", value_name = "FILE")]
    pub mapping: Option<PathBuf>,

    /// Mimic-path time dilation (>= 1; larger is slower).
    #[arg(long, global = true, value_name = "S")]
    pub speed_scale: Option<f64>,

    /// Generated-path keyframe reduction (>= 1; keep every Nth frame).
    #[arg(long, global = true, visible_alias = "factor", value_name = "N")]
    pub downsample_factor: Option<usize>,

    /// Replay canned responses from a fixture file instead of calling
    /// the server; repeat to give one fixture per annotator model.
    #[arg(long, global = true, value_name = "FILE")]
    pub mock: Vec<PathBuf>,
}

/// Raw settings read from the config file, before layering.
#[derive(Debug, Default)]
struct FileConfig {
    endpoint: Option<String>,
    model: Option<String>,
    template: Option<PathBuf>,
    profile: Option<PathBuf>,
    mapping: Option<PathBuf>,
    speed_scale: Option<f64>,
    downsample_factor: Option<usize>,
    concurrency: Option<usize>,
    out_dir: Option<PathBuf>,
    timeout_secs: Option<f64>,
    max_retries: Option<u32>,
    allow_remote: Option<bool>,
}

fn one_value<'a>(line: &'a textcfg::CfgLine) -> Result<&'a str, String> {
    if !line.pairs.is_empty() {
        return Err(format!(
            "`{}` takes a plain value, not key=value pairs",
            line.keyword
        ));
    }
    match line.positional.as_slice() {
        [v] => Ok(v.as_str()),
        [] => Err(format!("`{}` needs a value", line.keyword)),
        _ => Err(format!("`{}` takes exactly one value", line.keyword)),
    }
}

fn parse_num<T: std::str::FromStr>(keyword: &str, raw: &str) -> Result<T, String> {
    raw.parse::<T>()
        .map_err(|_| format!("`{keyword}` is not a valid number: `{raw}`"))
}

impl FileConfig {
    fn load(path: &Path) -> Result<Self, CliError> {
        let text = read_file(path)?;
        let base = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let mut cfg = FileConfig::default();
        for line in textcfg::scan(&text) {
            let result: Result<(), String> = (|| {
                let value = one_value(&line)?;
                match line.keyword.as_str() {
                    "endpoint" => cfg.endpoint = Some(value.to_string()),
                    "model" => cfg.model = Some(value.to_string()),
                    "template" => cfg.template = Some(base.join(value)),
                    "profile" => cfg.profile = Some(base.join(value)),
                    "mapping" => cfg.mapping = Some(base.join(value)),
                    "speed_scale" => cfg.speed_scale = Some(parse_num("speed_scale", value)?),
                    "downsample_factor" => {
                        cfg.downsample_factor = Some(parse_num("downsample_factor", value)?)
                    }
                    "concurrency" => cfg.concurrency = Some(parse_num("concurrency", value)?),
                    "out_dir" => cfg.out_dir = Some(base.join(value)),
                    "timeout_secs" => cfg.timeout_secs = Some(parse_num("timeout_secs", value)?),
                    "max_retries" => cfg.max_retries = Some(parse_num("max_retries", value)?),
                    "allow_remote" => {
                        cfg.allow_remote = Some(match value {
                            "true" => true,
                            "false" => false,
                            other => {
                                return Err(format!(
                                    "`allow_remote` must be true or false, got `{other}`"
                                ))
                            }
                        })
                    }
                    other => return Err(format!("unknown setting `{other}`")),
                }
                Ok(())
            })();
            result.map_err(|reason| {
                CliError::usage(format!(
                    "config `{}` line {}: {reason}",
                    path.display(),
                    line.line_no
                ))
            })?;
        }
        Ok(cfg)
    }
}

/// Fully layered settings for one invocation. Referenced files are
/// loaded lazily, so a command is only affected by the files it uses.
#[derive(Debug)]
pub struct PipelineConfig {
    pub backend: BackendConfig,
    pub template_path: Option<PathBuf>,
    pub profile_path: Option<PathBuf>,
    pub mapping_path: Option<PathBuf>,
    pub speed_scale: f64,
    pub downsample_factor: usize,
    pub concurrency: usize,
    pub out_dir: PathBuf,
    pub mocks: Vec<PathBuf>,
}

pub fn resolve(o: &Overrides) -> Result<PipelineConfig, CliError> {
    let file = match &o.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };

    let mut backend = BackendConfig::default();
    if let Some(v) = o.endpoint.clone().or(file.endpoint) {
        backend.endpoint_url = v;
    }
    if let Some(v) = o.model.clone().or(file.model) {
        backend.model_name = v;
    }
    if let Some(secs) = file.timeout_secs {
        if !(secs.is_finite() && secs > 0.0) {
            return Err(CliError::usage(format!(
                "timeout_secs must be a positive number, got {secs}"
            )));
        }
        backend.timeout = Duration::from_secs_f64(secs);
    }
    if let Some(r) = file.max_retries {
        backend.max_retries = r;
    }
    if let Some(a) = file.allow_remote {
        backend.allow_remote = a;
    }
    backend.validate().map_err(CliError::from)?;

    let speed_scale = o.speed_scale.or(file.speed_scale).unwrap_or(DEFAULT_SPEED_SCALE);
    if !(speed_scale.is_finite() && speed_scale >= 1.0) {
        return Err(CliError::usage(format!(
            "speed_scale must be >= 1, got {speed_scale}"
        )));
    }
    let downsample_factor = o
        .downsample_factor
        .or(file.downsample_factor)
        .unwrap_or(DEFAULT_DOWNSAMPLE_FACTOR);
    if downsample_factor < 1 {
        return Err(CliError::usage("downsample_factor must be >= 1"));
    }
    let concurrency = o
        .concurrency
        .or(file.concurrency)
        .unwrap_or(DEFAULT_CONCURRENCY);
    if concurrency < 1 {
        return Err(CliError::usage("concurrency must be >= 1"));
    }

    Ok(PipelineConfig {
        backend,
        template_path: o.template.clone().or(file.template),
        profile_path: o.profile.clone().or(file.profile),
        mapping_path: o.mapping.clone().or(file.mapping),
        speed_scale,
        downsample_factor,
        concurrency,
        out_dir: o
            .out_dir
            .clone()
            .or(file.out_dir)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
        mocks: o.mock.clone(),
    })
}

impl PipelineConfig {
    /// Where a subcommand's artifact goes: an explicit `--out` wins,
    /// otherwise the default file name inside the output directory.
    pub fn out_path(&self, explicit: Option<PathBuf>, default_name: &str) -> PathBuf {
        explicit.unwrap_or_else(|| self.out_dir.join(default_name))
    }

    pub fn template(&self) -> Result<PromptTemplate, CliError> {
        let Some(path) = &self.template_path else {
            return Ok(PromptTemplate::default_template());
        };
        let text = read_file(path)?;
        let oops =
            |e: gesturebot::gsd::GsdError| CliError::input(format!("template `{}`: {e}", path.display()));
        let template = PromptTemplate::parse(&text).map_err(oops)?;
        template.validate(&ExemplarPolicy::default()).map_err(oops)?;
        Ok(template)
    }

    pub fn profile(&self) -> Result<RobotProfile, CliError> {
        let Some(path) = &self.profile_path else {
            return Err(CliError::usage(
                "no robot profile configured; pass --profile FILE or set `profile` in the config file",
            ));
        };
        RobotProfile::from_config_str(&read_file(path)?)
            .map_err(|e| CliError::input(format!("profile `{}`: {e}", path.display())))
    }

    pub fn mapping(&self) -> Result<ChannelMapping, CliError> {
        let Some(path) = &self.mapping_path else {
            return Err(CliError::usage(
                "no channel mapping configured; pass --mapping FILE or set `mapping` in the config file",
            ));
        };
        parse_mapping(&read_file(path)?)
            .map_err(|e| CliError::input(format!("mapping `{}`: {e}", path.display())))
    }

    /// The single backend used by everything except multi-annotator
    /// runs: the fixture player when `--mock` is given, the live client
    /// otherwise.
    pub fn single_backend(&self) -> Result<Box<dyn Backend>, CliError> {
        match self.mocks.as_slice() {
            [] => Ok(Box::new(HttpBackend::new(self.backend.clone())?)),
            [path] => Ok(Box::new(MockBackend::from_file(path)?)),
            _ => Err(CliError::usage(
                "multiple --mock fixtures only make sense for `corpus annotate` with one fixture per model",
            )),
        }
    }

    /// One backend per annotator model. Mock fixtures pair up with the
    /// model list: one fixture is shared by all models, otherwise the
    /// counts must match.
    pub fn annotator_backends(
        &self,
        models: &[String],
    ) -> Result<Vec<(String, Box<dyn Backend>)>, CliError> {
        let mut out: Vec<(String, Box<dyn Backend>)> = Vec::with_capacity(models.len());
        match self.mocks.as_slice() {
            [] => {
                for model in models {
                    let mut cfg = self.backend.clone();
                    cfg.model_name = model.clone();
                    out.push((model.clone(), Box::new(HttpBackend::new(cfg)?)));
                }
            }
            [path] => {
                for model in models {
                    out.push((model.clone(), Box::new(MockBackend::from_file(path)?)));
                }
            }
            mocks if mocks.len() == models.len() => {
                for (model, path) in models.iter().zip(mocks) {
                    out.push((model.clone(), Box::new(MockBackend::from_file(path)?)));
                }
            }
            mocks => {
                return Err(CliError::usage(format!(
                    "{} --mock fixture(s) for {} annotator model(s); give one fixture total, or one per model",
                    mocks.len(),
                    models.len()
                )));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_cfg(dir: &tempfile::TempDir, text: &str) -> PathBuf {
        let path = dir.path().join("test.cfg");
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(text.as_bytes()).unwrap();
        path
    }

    #[test]
    fn defaults_apply_with_no_config_at_all() {
        let cfg = resolve(&Overrides::default()).unwrap();
        assert_eq!(cfg.speed_scale, 12.0);
        assert_eq!(cfg.downsample_factor, 12);
        assert_eq!(cfg.concurrency, 4);
        assert_eq!(cfg.out_dir, PathBuf::from("out"));
        assert!(cfg.template_path.is_none());
        assert!(cfg.profile_path.is_none());
    }

    #[test]
    fn file_settings_fill_in_and_flags_beat_them() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_cfg(
            &dir,
            "endpoint http://127.0.0.1:9999/api/generate\nmodel alpha\nspeed_scale 6\nconcurrency 2\nprofile rig.profile\n",
        );
        let from_file = resolve(&Overrides {
            config: Some(path.clone()),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(from_file.backend.endpoint_url, "http://127.0.0.1:9999/api/generate");
        assert_eq!(from_file.backend.model_name, "alpha");
        assert_eq!(from_file.speed_scale, 6.0);
        assert_eq!(from_file.concurrency, 2);
        // Relative paths resolve against the config file's directory.
        assert_eq!(from_file.profile_path, Some(dir.path().join("rig.profile")));

        let flagged = resolve(&Overrides {
            config: Some(path),
            model: Some("beta".into()),
            speed_scale: Some(3.0),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(flagged.backend.model_name, "beta");
        assert_eq!(flagged.speed_scale, 3.0);
        // Untouched file settings still apply underneath the flags.
        assert_eq!(flagged.concurrency, 2);
    }

    #[test]
    fn bad_config_lines_are_usage_errors_with_position() {
        let dir = tempfile::tempdir().unwrap();
        for (text, needle) in [
            ("bogus 1\n", "unknown setting `bogus`"),
            ("model\n", "`model` needs a value"),
            ("model a b\n", "exactly one value"),
            ("speed_scale fast\n", "not a valid number"),
            ("allow_remote maybe\n", "true or false"),
            ("endpoint x y=z\n", "plain value"),
        ] {
            let path = write_cfg(&dir, text);
            let err = resolve(&Overrides {
                config: Some(path),
                ..Default::default()
            })
            .unwrap_err();
            assert_eq!(err.kind, crate::errors::ErrorKind::Usage, "{text}");
            assert!(err.message.contains(needle), "{text} -> {}", err.message);
            assert!(err.message.contains("line 1"), "{}", err.message);
        }
    }

    #[test]
    fn factor_bounds_are_enforced() {
        let err = resolve(&Overrides {
            speed_scale: Some(0.5),
            ..Default::default()
        })
        .unwrap_err();
        assert!(err.message.contains("speed_scale"));
        let err = resolve(&Overrides {
            downsample_factor: Some(0),
            ..Default::default()
        })
        .unwrap_err();
        assert!(err.message.contains("downsample_factor"));
        let err = resolve(&Overrides {
            concurrency: Some(0),
            ..Default::default()
        })
        .unwrap_err();
        assert!(err.message.contains("concurrency"));
    }

    #[test]
    fn missing_profile_is_a_usage_error_naming_the_fix() {
        let cfg = resolve(&Overrides::default()).unwrap();
        let err = cfg.profile().unwrap_err();
        assert_eq!(err.kind, crate::errors::ErrorKind::Usage);
        assert!(err.message.contains("--profile"));
    }

    #[test]
    fn mock_fixture_counts_must_pair_with_models() {
        let cfg = resolve(&Overrides {
            mock: vec![PathBuf::from("a.json"), PathBuf::from("b.json")],
            ..Default::default()
        })
        .unwrap();
        let err = cfg
            .annotator_backends(&["m1".into(), "m2".into(), "m3".into()])
            .err()
            .expect("mismatched fixture count must fail");
        assert!(err.message.contains("2 --mock fixture(s) for 3"));
        let err = cfg
            .single_backend()
            .err()
            .expect("ambiguous fixtures must fail");
        assert_eq!(err.kind, crate::errors::ErrorKind::Usage);
    }

    #[test]
    fn builtin_template_loads_when_no_path_is_set() {
        let cfg = resolve(&Overrides::default()).unwrap();
        assert!(cfg.template().is_ok());
    }
}
