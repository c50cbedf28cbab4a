use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rmprofile::batch::ThresholdRule;
use rmprofile::io::csv::{DailyCsvSchema, MissingPolicy, NetMode};
use rmprofile::{DaySlice, DistanceConfig, DropStrategy, Method};

#[derive(Parser, Debug)]
#[command(
    name = "rmprofile",
    version,
    about = "Similarity profiles and refined motifs for daily load data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Profile one user's history and save the updater state.
    Init {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long)]
        snapshot: PathBuf,
    },
    /// Apply new days to a saved state.
    Update {
        #[arg(long)]
        snapshot: PathBuf,
        /// Comma-separated readings of one day.
        #[arg(long, conflicts_with = "input")]
        values: Option<String>,
        #[command(flatten)]
        input: OptionalInputArgs,
    },
    /// Print the refined motif of a saved state.
    Rm {
        #[arg(long)]
        snapshot: PathBuf,
    },
    /// Train a classifier on the refined motifs of labelled users.
    Train {
        #[command(flatten)]
        fleet: FleetArgs,
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        train: TrainArgs,
        /// Where the model snapshot goes.
        #[arg(long)]
        model: PathBuf,
    },
    /// Label users with a trained classifier.
    Classify {
        #[arg(long)]
        model: PathBuf,
        /// Classify the refined motif of this saved state.
        #[arg(long, conflicts_with = "input")]
        snapshot: Option<PathBuf>,
        #[command(flatten)]
        input: OptionalInputArgs,
        /// `user,label` rows; when given, accuracy is reported.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Per-user predictions as CSV.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    #[command(subcommand)]
    Experiment(Experiment),
    /// Time single updates against history length.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1000])]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 101)]
        reps: usize,
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic fleet as a wide CSV.
    Generate {
        #[command(flatten)]
        synth: SynthArgs,
        #[arg(long, value_enum, default_value_t = ArchetypeArg::Solar)]
        archetype: ArchetypeArg,
        /// Emit both archetypes, `--users` of each.
        #[arg(long)]
        mixed: bool,
        #[arg(long)]
        switch_day: Option<usize>,
        #[arg(long)]
        output: PathBuf,
        /// Also write `user,label` rows here.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum Experiment {
    /// Detection latency of the three drop strategies after a type switch.
    Switch {
        #[command(flatten)]
        fleet: FleetArgs,
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        train: TrainArgs,
        /// First day of the new type.
        #[arg(long, default_value_t = 20)]
        switch_day: usize,
        #[arg(long, value_enum, default_value_t = ArchetypeArg::Solar)]
        from: ArchetypeArg,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Memory saving of the codebook updater over a d_rep sweep.
    Compression {
        #[command(flatten)]
        fleet: FleetArgs,
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 1.0, 2.0])]
        sweep: Vec<f64>,
        /// Stream lengths in days; defaults to the full stream.
        #[arg(long, value_delimiter = ',')]
        lengths: Vec<usize>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Classification accuracy per drop strategy and memory size, and per method and stream length.
    Accuracy {
        #[command(flatten)]
        fleet: FleetArgs,
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [5usize, 7, 10, 15, 30])]
        memories: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        lengths: Vec<usize>,
        /// Held-out share of users; 0 scores on the training users.
        #[arg(long, default_value_t = 0.3)]
        test_fraction: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Wide,
    Long,
    SolarHome,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum NetModeArg {
    Net,
    LoadOnly,
    /// Fleet commands only: each customer gives a solar user (net import)
    /// and a non-solar user (load only).
    Both,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ArchetypeArg {
    Solar,
    NonSolar,
}

impl From<ArchetypeArg> for rmprofile::io::synthetic::Archetype {
    fn from(a: ArchetypeArg) -> Self {
        match a {
            ArchetypeArg::Solar => Self::Solar,
            ArchetypeArg::NonSolar => Self::NonSolar,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct CsvArgs {
    #[arg(long, value_enum, default_value_t = FormatArg::Wide)]
    pub format: FormatArg,
    /// How Solar Home categories are combined.
    #[arg(long, value_enum, default_value_t = NetModeArg::Net)]
    pub net_mode: NetModeArg,
    #[arg(long, default_value_t = 30)]
    pub interval_minutes: u32,
    /// Fill gaps by interpolation instead of rejecting incomplete days.
    #[arg(long)]
    pub fill_gaps: bool,
    /// Rejected-day report; printed to stderr when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// User to take from a multi-user file.
    #[arg(long)]
    pub user: Option<String>,
}

impl CsvArgs {
    pub fn schema(&self) -> DailyCsvSchema {
        let mut s = match self.format {
            FormatArg::Wide => DailyCsvSchema::default(),
            FormatArg::Long => DailyCsvSchema::long(),
            FormatArg::SolarHome => DailyCsvSchema::solar_home(match self.net_mode {
                NetModeArg::Net | NetModeArg::Both => NetMode::Net,
                NetModeArg::LoadOnly => NetMode::LoadOnly,
            }),
        };
        s.interval_minutes = self.interval_minutes;
        s.missing = if self.fill_gaps {
            MissingPolicy::Interpolate
        } else {
            MissingPolicy::Reject
        };
        s
    }
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Args, Debug, Clone)]
pub struct OptionalInputArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvArgs,
}

/// A fleet from a CSV with labels, or a synthetic one.
#[derive(Args, Debug, Clone)]
pub struct FleetArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// `user,label` rows for `--input`.
    #[arg(long, requires = "input")]
    pub labels: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvArgs,
    #[command(flatten)]
    pub synth: SynthArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    /// Synthetic users per class.
    #[arg(long, default_value_t = 50)]
    pub users: usize,
    #[arg(long, default_value_t = 60)]
    pub days: usize,
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct ProfileArgs {
    /// Updater; each command has its own default.
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long, default_value = "low")]
    pub strategy: DropStrategy,
    #[arg(long, default_value_t = 15)]
    pub memory: usize,
    /// `auto` (30th percentile of initial distances), `auto:<q>` or a distance.
    #[arg(long, default_value = "auto")]
    pub threshold: ThresholdRule,
    #[arg(long, default_value_t = 1.0)]
    pub d_rep: f64,
    /// Sakoe-Chiba radius; defaults to a band of m/8 rounded up. `none` disables it.
    #[arg(long)]
    pub band: Option<String>,
    /// Keep intervals a..b of each day.
    #[arg(long)]
    pub slice: Option<DaySlice>,
    /// Scale each day by its own peak.
    #[arg(long)]
    pub max_scale: bool,
    /// Leading days used to calibrate an automatic threshold in fleet commands.
    #[arg(long, default_value_t = 30)]
    pub calibration_days: usize,
}

impl ProfileArgs {
    /// Preprocessing only; the band is fixed once `m` is known.
    pub fn preparation(&self) -> DistanceConfig {
        DistanceConfig {
            day_slice: self.slice,
            max_scale: self.max_scale,
            ..Default::default()
        }
    }

    pub fn distance(&self, m: usize) -> anyhow::Result<DistanceConfig> {
        let band =
            match self.band.as_deref() {
                None => Some(DistanceConfig::default_band(m)),
                Some("none") => None,
                Some(r) => Some(r.parse::<usize>().map_err(|_| {
                    rmprofile::Error::InvalidInput(format!("band {r:?} is neither an integer nor none"))
                })?),
            };
        Ok(DistanceConfig {
            band_radius: band,
            ..self.preparation()
        })
    }
}

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 0.5)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 2000)]
    pub epochs: usize,
    /// Scale each motif by its peak before the classifier.
    #[arg(long)]
    pub scale_input: bool,
    #[arg(long, default_value_t = 0.5)]
    pub decision_threshold: f64,
}

impl TrainArgs {
    pub fn config(&self) -> rmprofile::TrainConfig {
        rmprofile::TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            scaling: if self.scale_input {
                rmprofile::InputScaling::Max
            } else {
                rmprofile::InputScaling::None
            },
            decision_threshold: self.decision_threshold,
        }
    }
}
