//! Single-branch (CoBraR) and two-branch (DeepMF) collaborative models.
//!
//! Both kinds down-project the sparse interaction profile of a user (a row of the
//! train matrix, length M) or an item (a column, length N) to `p` dimensions with a
//! linear layer, then encode it with a [`Branch`]. CoBraR routes users and items
//! through one shared branch; DeepMF gives each side its own branch of identical
//! shape. The score of a pair is the cosine of the two embeddings.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetError, InteractionDataset};
use crate::nn::{self, cosine, Branch, BranchGrads, LinearGrads, LinearLayer, Mode, NnError, Tape};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("model expects {expected} {what}, dataset has {got}")]
    DatasetShape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid architecture: {0}")]
    Architecture(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    CoBraR,
    DeepMF,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::CoBraR => "cobrar",
            ModelKind::DeepMF => "deepmf",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "cobrar" => Ok(ModelKind::CoBraR),
            "deepmf" => Ok(ModelKind::DeepMF),
            other => Err(format!("unknown model kind {other:?} (expected cobrar|deepmf)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    User,
    Item,
}

#[derive(Debug, Clone, PartialEq)]
enum Encoders<T> {
    Shared(Branch<T>),
    Separate { user: Branch<T>, item: Branch<T> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollabModel<T> {
    kind: ModelKind,
    user_proj: LinearLayer<T>,
    item_proj: LinearLayer<T>,
    encoders: Encoders<T>,
}

/// Records one embedding computation for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedTape<T> {
    side: Option<Side>,
    index: usize,
    branch: Tape<T>,
}

impl<T> Default for EmbedTape<T> {
    fn default() -> Self {
        EmbedTape {
            side: None,
            index: 0,
            branch: Tape::new(),
        }
    }
}

impl<T> EmbedTape<T> {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Gradient buffers matching a model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads<T> {
    pub user_proj: LinearGrads<T>,
    pub item_proj: LinearGrads<T>,
    /// One entry for CoBraR (the shared branch), two for DeepMF (user, item).
    pub branches: Vec<BranchGrads<T>>,
}

impl<T: Scalar> ModelGrads<T> {
    pub fn zero(&mut self) {
        self.user_proj.zero();
        self.item_proj.zero();
        self.branches.iter_mut().for_each(BranchGrads::zero);
    }

    /// Flat views in the same order as [`CollabModel::parameters_mut`].
    pub fn tensors(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = vec![
            &self.user_proj.weights,
            &self.user_proj.bias,
            &self.item_proj.weights,
            &self.item_proj.bias,
        ];
        for b in &self.branches {
            for l in &b.layers {
                out.push(&l.weights);
                out.push(&l.bias);
            }
        }
        out
    }
}

impl<T: Scalar> CollabModel<T> {
    /// Glorot-initialized model. `layer_sizes = [d_1, ..., d_L]`: the down-projections map
    /// onto `p = d_1` and the branch runs `d_1 -> ... -> d_L`.
    pub fn new<R: Rng + ?Sized>(
        kind: ModelKind,
        n_users: usize,
        n_items: usize,
        layer_sizes: &[usize],
        dropout: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let p = *layer_sizes
            .first()
            .ok_or_else(|| ModelError::Architecture("empty layer list".into()))?;
        if n_users == 0 || n_items == 0 {
            return Err(ModelError::Architecture("empty catalog".into()));
        }
        let user_proj = LinearLayer::glorot(n_items, p, rng);
        let item_proj = LinearLayer::glorot(n_users, p, rng);
        let g = Branch::glorot(layer_sizes, dropout, rng)?;
        match kind {
            ModelKind::CoBraR => Self::cobrar(user_proj, item_proj, g),
            ModelKind::DeepMF => {
                let g_v = Branch::glorot(layer_sizes, dropout, rng)?;
                Self::deepmf(user_proj, item_proj, g, g_v)
            }
        }
    }

    pub fn cobrar(user_proj: LinearLayer<T>, item_proj: LinearLayer<T>, g: Branch<T>) -> Result<Self> {
        check_proj(&user_proj, &item_proj, &g)?;
        Ok(CollabModel {
            kind: ModelKind::CoBraR,
            user_proj,
            item_proj,
            encoders: Encoders::Shared(g),
        })
    }

    pub fn deepmf(
        user_proj: LinearLayer<T>,
        item_proj: LinearLayer<T>,
        g_u: Branch<T>,
        g_v: Branch<T>,
    ) -> Result<Self> {
        check_proj(&user_proj, &item_proj, &g_u)?;
        let shapes = |b: &Branch<T>| b.layers().iter().map(|l| (l.d_in(), l.d_out())).collect::<Vec<_>>();
        if shapes(&g_u) != shapes(&g_v) {
            return Err(ModelError::Architecture("DeepMF branches differ in shape".into()));
        }
        Ok(CollabModel {
            kind: ModelKind::DeepMF,
            user_proj,
            item_proj,
            encoders: Encoders::Separate { user: g_u, item: g_v },
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn n_users(&self) -> usize {
        self.item_proj.d_in()
    }

    pub fn n_items(&self) -> usize {
        self.user_proj.d_in()
    }

    pub fn user_proj(&self) -> &LinearLayer<T> {
        &self.user_proj
    }

    pub fn item_proj(&self) -> &LinearLayer<T> {
        &self.item_proj
    }

    pub fn user_branch(&self) -> &Branch<T> {
        match &self.encoders {
            Encoders::Shared(g) => g,
            Encoders::Separate { user, .. } => user,
        }
    }

    pub fn item_branch(&self) -> &Branch<T> {
        match &self.encoders {
            Encoders::Shared(g) => g,
            Encoders::Separate { item, .. } => item,
        }
    }

    /// The branches in parameter order (one for CoBraR, two for DeepMF).
    pub fn branches(&self) -> Vec<&Branch<T>> {
        match &self.encoders {
            Encoders::Shared(g) => vec![g],
            Encoders::Separate { user, item } => vec![user, item],
        }
    }

    pub fn branches_mut(&mut self) -> Vec<&mut Branch<T>> {
        match &mut self.encoders {
            Encoders::Shared(g) => vec![g],
            Encoders::Separate { user, item } => vec![user, item],
        }
    }

    /// `[d_1, ..., d_L]` of the encoder.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let b = self.user_branch();
        let mut sizes = vec![self.user_proj.d_out()];
        sizes.extend(b.layers().iter().map(LinearLayer::d_out));
        sizes
    }

    pub fn embedding_dim(&self) -> usize {
        *self.layer_sizes().last().expect("at least the projection width")
    }

    fn branch_slot(&self, side: Side) -> usize {
        match (&self.encoders, side) {
            (Encoders::Shared(_), _) | (_, Side::User) => 0,
            (Encoders::Separate { .. }, Side::Item) => 1,
        }
    }

    pub fn zero_grads(&self) -> ModelGrads<T> {
        ModelGrads {
            user_proj: LinearGrads::zeros_like(&self.user_proj),
            item_proj: LinearGrads::zeros_like(&self.item_proj),
            branches: self.branches().into_iter().map(BranchGrads::zeros_like).collect(),
        }
    }

    /// Named flat parameter tensors; the order matches [`ModelGrads::tensors`].
    pub fn parameters_mut(&mut self) -> Vec<(String, &mut [T])> {
        let CollabModel {
            user_proj,
            item_proj,
            encoders,
            ..
        } = self;
        let mut out: Vec<(String, &mut [T])> = vec![
            ("user_proj.weight".into(), &mut user_proj.weights[..]),
            ("user_proj.bias".into(), &mut user_proj.bias[..]),
            ("item_proj.weight".into(), &mut item_proj.weights[..]),
            ("item_proj.bias".into(), &mut item_proj.bias[..]),
        ];
        let branches: Vec<(&str, &mut Branch<T>)> = match encoders {
            Encoders::Shared(g) => vec![("g", g)],
            Encoders::Separate { user, item } => vec![("g_user", user), ("g_item", item)],
        };
        for (name, b) in branches {
            for (l, layer) in b.layers_mut().iter_mut().enumerate() {
                out.push((format!("{name}.{l}.weight"), &mut layer.weights[..]));
                out.push((format!("{name}.{l}.bias"), &mut layer.bias[..]));
            }
        }
        out
    }

    /// Named flat parameter tensors with their (rows, cols) shapes, in parameter order.
    pub fn parameters(&self) -> Vec<(String, (usize, usize), &[T])> {
        fn lin<'a, T: Scalar>(name: &str, l: &'a LinearLayer<T>) -> [(String, (usize, usize), &'a [T]); 2] {
            [
                (format!("{name}.weight"), (l.d_in(), l.d_out()), &l.weights[..]),
                (format!("{name}.bias"), (1, l.d_out()), &l.bias[..]),
            ]
        }
        let mut out = Vec::from(lin("user_proj", &self.user_proj));
        out.extend(lin("item_proj", &self.item_proj));
        let names: &[&str] = match self.encoders {
            Encoders::Shared(_) => &["g"],
            Encoders::Separate { .. } => &["g_user", "g_item"],
        };
        for (b, name) in self.branches().into_iter().zip(names) {
            for (l, layer) in b.layers().iter().enumerate() {
                out.extend(lin(&format!("{name}.{l}"), layer));
            }
        }
        out
    }

    pub fn parameter_sizes(&self) -> Vec<usize> {
        self.parameters().iter().map(|(_, _, d)| d.len()).collect()
    }

    /// Trainable scalars including biases.
    pub fn num_parameters(&self) -> usize {
        self.parameter_sizes().iter().sum()
    }

    fn check_dataset(&self, train: &InteractionDataset) -> Result<()> {
        if train.n_items() != self.n_items() {
            return Err(ModelError::DatasetShape {
                what: "items",
                expected: self.n_items(),
                got: train.n_items(),
            });
        }
        if train.n_users() != self.n_users() {
            return Err(ModelError::DatasetShape {
                what: "users",
                expected: self.n_users(),
                got: train.n_users(),
            });
        }
        Ok(())
    }

    fn embed<R: Rng + ?Sized>(
        &self,
        train: &InteractionDataset,
        side: Side,
        index: usize,
        mode: Mode,
        rng: &mut R,
        tape: &mut EmbedTape<T>,
    ) -> Result<Vec<T>> {
        self.check_dataset(train)?;
        let (profile, proj, branch) = match side {
            Side::User => (train.user_profile(index)?, &self.user_proj, self.user_branch()),
            Side::Item => (train.item_profile(index)?, &self.item_proj, self.item_branch()),
        };
        let h = proj.forward_sparse(profile.indices)?;
        let e = branch.forward(&h, mode, rng, &mut tape.branch)?;
        tape.side = (mode == Mode::Train).then_some(side);
        tape.index = index;
        Ok(e)
    }

    /// `e_i = g(f_u(R_i*))` from the user's train profile, never densified.
    pub fn user_embed<R: Rng + ?Sized>(
        &self,
        train: &InteractionDataset,
        user: usize,
        mode: Mode,
        rng: &mut R,
        tape: &mut EmbedTape<T>,
    ) -> Result<Vec<T>> {
        self.embed(train, Side::User, user, mode, rng, tape)
    }

    /// `e_j = g(f_t(R_*j))` from the item's train profile.
    pub fn item_embed<R: Rng + ?Sized>(
        &self,
        train: &InteractionDataset,
        item: usize,
        mode: Mode,
        rng: &mut R,
        tape: &mut EmbedTape<T>,
    ) -> Result<Vec<T>> {
        self.embed(train, Side::Item, item, mode, rng, tape)
    }

    /// Backpropagates an embedding gradient into the projection and branch gradients of
    /// the side recorded in `tape`.
    pub fn embed_backward(
        &self,
        train: &InteractionDataset,
        tape: &EmbedTape<T>,
        grad: &[T],
        grads: &mut ModelGrads<T>,
    ) -> Result<()> {
        let side = tape
            .side
            .ok_or_else(|| NnError::StaleTape("embedding was not computed in train mode".into()))?;
        let slot = self.branch_slot(side);
        let (profile, proj, branch, proj_grads) = match side {
            Side::User => (
                train.user_profile(tape.index)?,
                &self.user_proj,
                self.user_branch(),
                &mut grads.user_proj,
            ),
            Side::Item => (
                train.item_profile(tape.index)?,
                &self.item_proj,
                self.item_branch(),
                &mut grads.item_proj,
            ),
        };
        let gh = branch.backward(&tape.branch, grad, &mut grads.branches[slot])?;
        proj.backward_sparse(profile.indices, &gh, proj_grads)?;
        Ok(())
    }

    /// Eval-mode embeddings for every user and item.
    pub fn embed_all(&self, train: &InteractionDataset) -> Result<EmbeddingTable<T>> {
        self.check_dataset(train)?;
        let run = |side: Side, n: usize| -> Result<Vec<Vec<T>>> {
            (0..n)
                .into_par_iter()
                .map(|idx| {
                    // eval mode draws nothing from the generator
                    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
                    self.embed(train, side, idx, Mode::Eval, &mut rng, &mut EmbedTape::new())
                })
                .collect()
        };
        Ok(EmbeddingTable::new(run(Side::User, self.n_users())?, run(Side::Item, self.n_items())?))
    }
}

fn check_proj<T: Scalar>(user_proj: &LinearLayer<T>, item_proj: &LinearLayer<T>, g: &Branch<T>) -> Result<()> {
    if user_proj.d_out() != item_proj.d_out() {
        return Err(ModelError::Architecture(format!(
            "user projection width {} differs from item projection width {}",
            user_proj.d_out(),
            item_proj.d_out()
        )));
    }
    if let Some(d) = g.input_dim() {
        if d != user_proj.d_out() {
            return Err(ModelError::Architecture(format!(
                "projection width {} does not feed branch input {d}",
                user_proj.d_out()
            )));
        }
    }
    Ok(())
}

/// Recommendation score: raw cosine of the two embeddings.
pub fn score<T: Scalar>(e_user: &[T], e_item: &[T]) -> T {
    cosine(e_user, e_item)
}

/// Frozen embeddings with their floored norms, for fast exhaustive scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    pub users: Vec<Vec<T>>,
    pub items: Vec<Vec<T>>,
    user_norms: Vec<T>,
    item_norms: Vec<T>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn new(users: Vec<Vec<T>>, items: Vec<Vec<T>>) -> Self {
        let eps = T::of(nn::COSINE_EPS);
        let norms = |v: &[Vec<T>]| v.iter().map(|e| crate::scalar::norm(e).max(eps)).collect();
        EmbeddingTable {
            user_norms: norms(&users),
            item_norms: norms(&items),
            users,
            items,
        }
    }

    /// Same value, bit for bit, as [`score`] on the stored embeddings.
    #[inline]
    pub fn score(&self, user: usize, item: usize) -> T {
        dot(&self.users[user], &self.items[item]) / (self.user_norms[user] * self.item_norms[item])
    }
}

/// Parameter counts with biases neglected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCount {
    /// `sum_{i=1}^{L-1} d_i * d_{i+1}`, doubled for DeepMF.
    pub branch_params: u64,
    /// `M * p + N * p` with `p = d_1`.
    pub downproj_params: u64,
    pub total: u64,
}

pub fn param_count(layer_sizes: &[usize], kind: ModelKind, n_users: usize, n_items: usize) -> ParamCount {
    let single: u64 = layer_sizes.windows(2).map(|w| (w[0] * w[1]) as u64).sum();
    let branch_params = match kind {
        ModelKind::CoBraR => single,
        ModelKind::DeepMF => 2 * single,
    };
    let p = layer_sizes.first().copied().unwrap_or(0) as u64;
    let downproj_params = (n_items as u64 + n_users as u64) * p;
    ParamCount {
        branch_params,
        downproj_params,
        total: branch_params + downproj_params,
    }
}
