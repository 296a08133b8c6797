//! Gene expression programming: multi-gene Karva chromosomes evolved by
//! roulette selection, mutation, recombination and IS transposition, with
//! single-elite preservation and addition as the gene linking function.
//!
//! Numeric constants use a simple per-gene table sampled once at
//! initialization; constant symbols reference table slots. Gene recombination
//! swaps a gene together with its table, point recombination swaps symbols
//! only.

pub mod expr;

pub use expr::{decode, ExpressionTree, FuncOp, Symbol};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Fitness is `FITNESS_SCALE / (1 + RMSE)`: 0 for non-finite predictions,
/// `FITNESS_SCALE` for an exact fit.
pub const FITNESS_SCALE: f64 = 1000.0;
/// Best-fitness improvements at or below this do not reset the plateau
/// counter.
pub const PLATEAU_EPSILON: f64 = 1e-9;
/// Transposed insertion sequences are 1..=3 symbols long.
const IS_MAX_LEN: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct GepConfig {
    pub head_length: usize,
    pub genes_per_chromosome: usize,
    pub population: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub one_point_recomb_rate: f64,
    pub two_point_recomb_rate: f64,
    pub gene_recomb_rate: f64,
    pub is_transposition_rate: f64,
    pub function_set: Vec<FuncOp>,
    pub constants_range: (f64, f64),
    pub constants_count: usize,
    /// Generations without improvement before stopping early; 0 disables.
    pub plateau_patience: usize,
    pub seed: u64,
}

impl Default for GepConfig {
    fn default() -> Self {
        GepConfig {
            head_length: 7,
            genes_per_chromosome: 3,
            population: 50,
            generations: 200,
            mutation_rate: 0.044,
            one_point_recomb_rate: 0.3,
            two_point_recomb_rate: 0.3,
            gene_recomb_rate: 0.1,
            is_transposition_rate: 0.1,
            function_set: FuncOp::ALL.to_vec(),
            constants_range: (-10.0, 10.0),
            constants_count: 10,
            plateau_patience: 50,
            seed: 0,
        }
    }
}

impl GepConfig {
    pub fn max_arity(&self) -> usize {
        self.function_set
            .iter()
            .map(|f| f.arity())
            .max()
            .unwrap_or(1)
    }

    pub fn tail_length(&self) -> usize {
        self.head_length * (self.max_arity() - 1) + 1
    }

    pub fn gene_length(&self) -> usize {
        self.head_length + self.tail_length()
    }

    pub fn validate(&self) -> Result<()> {
        if self.head_length < 1 {
            return Err(Error::Config("head length must be at least 1".into()));
        }
        if self.genes_per_chromosome < 1 {
            return Err(Error::Config("need at least one gene".into()));
        }
        if self.population < 2 {
            return Err(Error::Config("population must be at least 2".into()));
        }
        if self.generations < 1 {
            return Err(Error::Config("need at least one generation".into()));
        }
        if self.function_set.is_empty() {
            return Err(Error::Config("function set must not be empty".into()));
        }
        for (name, rate) in [
            ("mutation_rate", self.mutation_rate),
            ("one_point_recomb_rate", self.one_point_recomb_rate),
            ("two_point_recomb_rate", self.two_point_recomb_rate),
            ("gene_recomb_rate", self.gene_recomb_rate),
            ("is_transposition_rate", self.is_transposition_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!(
                    "{name} must be in [0, 1], got {rate}"
                )));
            }
        }
        if self.constants_range.0 > self.constants_range.1 {
            return Err(Error::Config("constants range is inverted".into()));
        }
        Ok(())
    }
}

/// Multi-gene chromosome: fixed-layout symbol strings plus one constant table
/// per gene.
#[derive(Debug, Clone, PartialEq)]
pub struct GepChromosome {
    pub genes: Vec<Vec<Symbol>>,
    pub constants: Vec<Vec<f64>>,
}

impl GepChromosome {
    /// Samples a random chromosome honoring the head/tail discipline.
    pub fn random(cfg: &GepConfig, n_vars: usize, rng: &mut impl Rng) -> GepChromosome {
        let mut genes = Vec::with_capacity(cfg.genes_per_chromosome);
        let mut constants = Vec::with_capacity(cfg.genes_per_chromosome);
        for _ in 0..cfg.genes_per_chromosome {
            let mut gene = Vec::with_capacity(cfg.gene_length());
            for pos in 0..cfg.gene_length() {
                gene.push(if pos < cfg.head_length {
                    random_head_symbol(cfg, n_vars, rng)
                } else {
                    random_terminal(cfg, n_vars, rng)
                });
            }
            genes.push(gene);
            let (lo, hi) = cfg.constants_range;
            constants.push(
                (0..cfg.constants_count)
                    .map(|_| {
                        if lo == hi {
                            lo
                        } else {
                            rng.random_range(lo..hi)
                        }
                    })
                    .collect(),
            );
        }
        GepChromosome { genes, constants }
    }

    /// Checks the head/tail discipline and symbol index ranges.
    pub fn validate(&self, cfg: &GepConfig, n_vars: usize) -> Result<()> {
        if self.genes.len() != cfg.genes_per_chromosome
            || self.constants.len() != cfg.genes_per_chromosome
        {
            return Err(Error::InvalidGene("wrong gene count".into()));
        }
        for (g, gene) in self.genes.iter().enumerate() {
            if gene.len() != cfg.gene_length() {
                return Err(Error::InvalidGene(format!("gene {g} has wrong length")));
            }
            for (pos, sym) in gene.iter().enumerate() {
                if pos >= cfg.head_length && !sym.is_terminal() {
                    return Err(Error::InvalidGene(format!(
                        "gene {g} has a function at tail position {pos}"
                    )));
                }
                match *sym {
                    Symbol::Var(i) if i >= n_vars => {
                        return Err(Error::InvalidGene(format!(
                            "variable index {i} out of range"
                        )))
                    }
                    Symbol::Const(i) if i >= cfg.constants_count => {
                        return Err(Error::InvalidGene(format!(
                            "constant index {i} out of range"
                        )))
                    }
                    Symbol::Func(op) if !cfg.function_set.contains(&op) => {
                        return Err(Error::InvalidGene(
                            "operator outside the function set".into(),
                        ))
                    }
                    _ => {}
                }
            }
            if self.constants[g].len() != cfg.constants_count {
                return Err(Error::InvalidGene(format!(
                    "gene {g} has wrong constant count"
                )));
            }
        }
        Ok(())
    }

    /// Decodes every gene to its expression tree.
    pub fn decode_all(&self, cfg: &GepConfig) -> Result<Vec<ExpressionTree>> {
        self.genes
            .iter()
            .map(|g| decode(g, cfg.max_arity()))
            .collect()
    }

    /// Raw gene strings: space-separated symbol tokens, one string per gene.
    pub fn gene_strings(&self, var_names: &[String]) -> Vec<String> {
        self.genes
            .iter()
            .map(|gene| {
                gene.iter()
                    .map(|s| s.token(var_names))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect()
    }
}

fn random_terminal(cfg: &GepConfig, n_vars: usize, rng: &mut impl Rng) -> Symbol {
    let choices = n_vars + cfg.constants_count;
    let pick = rng.random_range(0..choices.max(1));
    if pick < n_vars {
        Symbol::Var(pick)
    } else {
        Symbol::Const(pick - n_vars)
    }
}

fn random_head_symbol(cfg: &GepConfig, n_vars: usize, rng: &mut impl Rng) -> Symbol {
    let n_funcs = cfg.function_set.len();
    let choices = n_funcs + n_vars + cfg.constants_count;
    let pick = rng.random_range(0..choices);
    if pick < n_funcs {
        Symbol::Func(cfg.function_set[pick])
    } else if pick < n_funcs + n_vars {
        Symbol::Var(pick - n_funcs)
    } else {
        Symbol::Const(pick - n_funcs - n_vars)
    }
}

/// Point mutation: every position flips with probability
/// `cfg.mutation_rate`; head positions may receive any symbol, tail positions
/// only terminals.
pub fn mutate(c: &mut GepChromosome, cfg: &GepConfig, n_vars: usize, rng: &mut impl Rng) {
    for gene in &mut c.genes {
        for (pos, sym) in gene.iter_mut().enumerate() {
            if rng.random::<f64>() < cfg.mutation_rate {
                *sym = if pos < cfg.head_length {
                    random_head_symbol(cfg, n_vars, rng)
                } else {
                    random_terminal(cfg, n_vars, rng)
                };
            }
        }
    }
}

/// Insertion-sequence transposition: a short sequence copied from anywhere in
/// the chromosome is inserted at a non-root head position, shifting the head
/// right and truncating at the head boundary. A no-op when the head has no
/// insertion point.
pub fn is_transpose(c: &mut GepChromosome, cfg: &GepConfig, rng: &mut impl Rng) {
    if cfg.head_length < 2 {
        return;
    }
    let src_gene = rng.random_range(0..c.genes.len());
    let start = rng.random_range(0..cfg.gene_length());
    let max_len = IS_MAX_LEN.min(cfg.gene_length() - start);
    let len = rng.random_range(1..=max_len);
    let seq: Vec<Symbol> = c.genes[src_gene][start..start + len].to_vec();

    let dst_gene = rng.random_range(0..c.genes.len());
    let insert_at = rng.random_range(1..cfg.head_length);
    let head: Vec<Symbol> = c.genes[dst_gene][..cfg.head_length].to_vec();
    let mut new_head: Vec<Symbol> = Vec::with_capacity(cfg.head_length + seq.len());
    new_head.extend_from_slice(&head[..insert_at]);
    new_head.extend_from_slice(&seq);
    new_head.extend_from_slice(&head[insert_at..]);
    new_head.truncate(cfg.head_length);
    c.genes[dst_gene][..cfg.head_length].copy_from_slice(&new_head);
}

fn flat_len(c: &GepChromosome) -> usize {
    c.genes.iter().map(Vec::len).sum()
}

fn swap_range(a: &mut GepChromosome, b: &mut GepChromosome, range: std::ops::Range<usize>) {
    let gene_len = a.genes[0].len();
    for flat in range {
        let (g, pos) = (flat / gene_len, flat % gene_len);
        std::mem::swap(&mut a.genes[g][pos], &mut b.genes[g][pos]);
    }
}

/// One-point recombination over the flattened chromosomes: suffixes beyond a
/// random crossover point are exchanged. Constant tables stay put.
pub fn recombine_one_point(a: &mut GepChromosome, b: &mut GepChromosome, rng: &mut impl Rng) {
    let total = flat_len(a);
    if total < 2 {
        return;
    }
    let point = rng.random_range(1..total);
    swap_range(a, b, point..total);
}

/// Two-point recombination: the span between two random points is exchanged.
pub fn recombine_two_point(a: &mut GepChromosome, b: &mut GepChromosome, rng: &mut impl Rng) {
    let total = flat_len(a);
    if total < 2 {
        return;
    }
    let p1 = rng.random_range(1..total);
    let p2 = rng.random_range(1..total);
    let (lo, hi) = (p1.min(p2), p1.max(p2));
    swap_range(a, b, lo..hi);
}

/// Whole-gene recombination: one gene, together with its constant table, is
/// exchanged between the parents.
pub fn recombine_genes(a: &mut GepChromosome, b: &mut GepChromosome, rng: &mut impl Rng) {
    let k = rng.random_range(0..a.genes.len());
    std::mem::swap(&mut a.genes[k], &mut b.genes[k]);
    std::mem::swap(&mut a.constants[k], &mut b.constants[k]);
}

/// Fitness-proportional selection. Non-positive total weight falls back to a
/// uniform draw.
pub fn roulette_spin(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().filter(|w| w.is_finite()).sum();
    if total.is_nan() || total <= 0.0 {
        return rng.random_range(0..weights.len());
    }
    let mut r = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if w.is_finite() && w > 0.0 {
            r -= w;
            if r <= 0.0 {
                return i;
            }
        }
    }
    weights.len() - 1
}

/// Fitness of a chromosome over explicit rows: genes are evaluated per row and
/// linked by addition.
pub fn chromosome_fitness(
    c: &GepChromosome,
    cfg: &GepConfig,
    x_columns: &[Vec<f64>],
    y: &[f64],
) -> Result<f64> {
    let trees = c.decode_all(cfg)?;
    let n = y.len();
    let n_vars = x_columns.len();
    let mut vars = vec![0.0; n_vars];
    let mut sq_sum = 0.0;
    for row in 0..n {
        for (j, col) in x_columns.iter().enumerate() {
            vars[j] = col[row];
        }
        let mut pred = 0.0;
        for (tree, consts) in trees.iter().zip(&c.constants) {
            pred += tree.evaluate(&vars, consts);
        }
        if !pred.is_finite() {
            return Ok(0.0);
        }
        let e = y[row] - pred;
        sq_sum += e * e;
    }
    if !sq_sum.is_finite() {
        return Ok(0.0);
    }
    let rmse = (sq_sum / n as f64).sqrt();
    Ok(FITNESS_SCALE / (1.0 + rmse))
}

/// Fitness measured on the training split of a dataset.
pub fn fitness(
    c: &GepChromosome,
    cfg: &GepConfig,
    d: &Dataset,
    inputs: &[String],
    output: &str,
) -> Result<f64> {
    let x: Vec<Vec<f64>> = inputs
        .iter()
        .map(|name| d.train_column(name))
        .collect::<Result<_>>()?;
    let y = d.train_column(output)?;
    chromosome_fitness(c, cfg, &x, &y)
}

/// One row of the evolution log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

/// Evolution outcome: the best chromosome seen, its decoded trees and the
/// per-generation log.
#[derive(Debug, Clone)]
pub struct GepModel {
    pub inputs: Vec<String>,
    pub chromosome: GepChromosome,
    pub trees: Vec<ExpressionTree>,
    pub fitness: f64,
    pub log: Vec<GenerationStats>,
}

impl GepModel {
    /// Row-wise evaluation over any dataset holding the input columns.
    pub fn predict(&self, rows: &Dataset) -> Result<Vec<f64>> {
        let cols: Vec<&[f64]> = self
            .inputs
            .iter()
            .map(|name| rows.column(name))
            .collect::<Result<_>>()?;
        let mut vars = vec![0.0; cols.len()];
        let mut out = Vec::with_capacity(rows.n_rows());
        for row in 0..rows.n_rows() {
            for (j, col) in cols.iter().enumerate() {
                vars[j] = col[row];
            }
            let mut pred = 0.0;
            for (tree, consts) in self.trees.iter().zip(&self.chromosome.constants) {
                pred += tree.evaluate(&vars, consts);
            }
            out.push(pred);
        }
        Ok(out)
    }

    /// Linked infix expression of all genes.
    pub fn expression(&self) -> String {
        self.trees
            .iter()
            .zip(&self.chromosome.constants)
            .map(|(t, c)| t.infix(&self.inputs, c))
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// Export text: the infix expression followed by the raw gene strings.
    pub fn export_text(&self) -> String {
        let mut out = format!("expression,{}\n", self.expression());
        for (i, g) in self
            .chromosome
            .gene_strings(&self.inputs)
            .iter()
            .enumerate()
        {
            out.push_str(&format!("gene{i},{g}\n"));
        }
        for (i, consts) in self.chromosome.constants.iter().enumerate() {
            let joined = consts
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            out.push_str(&format!("constants{i},{joined}\n"));
        }
        out
    }

    /// Evolution log in CSV form.
    pub fn log_csv(&self) -> String {
        let mut out = String::from("generation,best_fitness,mean_fitness\n");
        for row in &self.log {
            out.push_str(&format!(
                "{},{},{}\n",
                row.generation, row.best_fitness, row.mean_fitness
            ));
        }
        out
    }
}

/// Runs the generational loop on the training split. Deterministic for a
/// fixed config.
pub fn evolve(d: &Dataset, inputs: &[String], output: &str, cfg: &GepConfig) -> Result<GepModel> {
    cfg.validate()?;
    if inputs.is_empty() {
        return Err(Error::Config("gep needs at least one input".into()));
    }
    let x: Vec<Vec<f64>> = inputs
        .iter()
        .map(|name| d.train_column(name))
        .collect::<Result<_>>()?;
    let y = d.train_column(output)?;
    if y.is_empty() {
        return Err(Error::DegenerateInput("empty training split".into()));
    }

    let n_vars = inputs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut population: Vec<GepChromosome> = (0..cfg.population)
        .map(|_| GepChromosome::random(cfg, n_vars, &mut rng))
        .collect();
    let mut fitnesses: Vec<f64> = population
        .iter()
        .map(|c| chromosome_fitness(c, cfg, &x, &y))
        .collect::<Result<_>>()?;

    let mut log = Vec::with_capacity(cfg.generations + 1);
    let push_stats = |log: &mut Vec<GenerationStats>, generation: usize, fits: &[f64]| {
        let best = fits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = fits.iter().sum::<f64>() / fits.len() as f64;
        log.push(GenerationStats {
            generation,
            best_fitness: best,
            mean_fitness: mean,
        });
    };
    push_stats(&mut log, 0, &fitnesses);

    let best_index = |fits: &[f64]| -> usize {
        (0..fits.len())
            .max_by(|&a, &b| fits[a].total_cmp(&fits[b]))
            .unwrap()
    };
    let mut champion_idx = best_index(&fitnesses);
    let mut champion = population[champion_idx].clone();
    let mut champion_fitness = fitnesses[champion_idx];
    let mut stagnant = 0usize;

    for generation in 1..=cfg.generations {
        // replication: elite first, roulette for the rest
        let elite_idx = best_index(&fitnesses);
        let mut next: Vec<GepChromosome> = Vec::with_capacity(cfg.population);
        next.push(population[elite_idx].clone());
        for _ in 1..cfg.population {
            next.push(population[roulette_spin(&fitnesses, &mut rng)].clone());
        }

        // variation, elite excluded
        for c in next.iter_mut().skip(1) {
            mutate(c, cfg, n_vars, &mut rng);
        }
        for c in next.iter_mut().skip(1) {
            if rng.random::<f64>() < cfg.is_transposition_rate {
                is_transpose(c, cfg, &mut rng);
            }
        }
        let mut pair = 1;
        while pair + 1 < cfg.population {
            let (left, right) = next.split_at_mut(pair + 1);
            let a = &mut left[pair];
            let b = &mut right[0];
            if rng.random::<f64>() < cfg.one_point_recomb_rate {
                recombine_one_point(a, b, &mut rng);
            }
            if rng.random::<f64>() < cfg.two_point_recomb_rate {
                recombine_two_point(a, b, &mut rng);
            }
            if rng.random::<f64>() < cfg.gene_recomb_rate {
                recombine_genes(a, b, &mut rng);
            }
            pair += 2;
        }

        population = next;
        fitnesses = population
            .iter()
            .map(|c| chromosome_fitness(c, cfg, &x, &y))
            .collect::<Result<_>>()?;
        push_stats(&mut log, generation, &fitnesses);

        champion_idx = best_index(&fitnesses);
        if fitnesses[champion_idx] > champion_fitness + PLATEAU_EPSILON {
            champion = population[champion_idx].clone();
            champion_fitness = fitnesses[champion_idx];
            stagnant = 0;
        } else {
            if fitnesses[champion_idx] > champion_fitness {
                champion = population[champion_idx].clone();
                champion_fitness = fitnesses[champion_idx];
            }
            stagnant += 1;
            if cfg.plateau_patience > 0 && stagnant >= cfg.plateau_patience {
                break;
            }
        }
    }

    let trees = champion.decode_all(cfg)?;
    Ok(GepModel {
        inputs: inputs.to_vec(),
        chromosome: champion,
        trees,
        fitness: champion_fitness,
        log,
    })
}
