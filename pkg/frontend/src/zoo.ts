/**
 * Model zoo: built-in deterministically seeded demo models plus any local
 * tfjs LayersModel directory (a folder holding model.json and weight bins).
 *
 * Penultimate features are defined as the input to the final classification
 * layer, matching the representation convention of the pruning toolkit.
 */

import * as fs from 'fs'
import * as path from 'path'
import * as tf from '@tensorflow/tfjs'

export interface ZooEntry {
  /** identifier recorded in the provenance sidecar */
  name: string
  model: tf.LayersModel
  /** native square input resolution */
  inputSize: number
  /** human-readable preprocessing description */
  preprocessing: string
}

/** mulberry32: tiny deterministic PRNG for built-in weights */
function seededRandom(seed: number): () => number {
  let a = seed >>> 0
  return () => {
    a = (a + 0x6d2b79f5) >>> 0
    let t = a
    t = Math.imul(t ^ (t >>> 15), t | 1)
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61)
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }
}

function seedWeights(model: tf.LayersModel, seed: number): void {
  const rand = seededRandom(seed)
  const fresh = model.getWeights().map(w => {
    const fanIn = w.shape.length > 1 ? w.shape.slice(0, -1).reduce((a, b) => a * (b ?? 1), 1) : w.shape[0]!
    const bound = 1 / Math.sqrt(Math.max(fanIn, 1))
    const data = new Float32Array(w.size)
    for (let i = 0; i < data.length; i++) data[i] = (rand() * 2 - 1) * bound
    return tf.tensor(data, w.shape as number[])
  })
  model.setWeights(fresh)
  fresh.forEach(t => t.dispose())
}

function buildMicroCnn(name: string, inputSize: number, nClasses: number, seed: number): ZooEntry {
  const model = tf.sequential({
    layers: [
      tf.layers.conv2d({
        inputShape: [inputSize, inputSize, 3],
        filters: 8, kernelSize: 3, activation: 'relu', padding: 'same',
      }),
      tf.layers.maxPooling2d({ poolSize: 2 }),
      tf.layers.conv2d({ filters: 16, kernelSize: 3, activation: 'relu', padding: 'same' }),
      tf.layers.globalAveragePooling2d({}),
      tf.layers.dense({ units: 12, activation: 'relu' }),
      tf.layers.dense({ units: nClasses }),
    ],
  })
  seedWeights(model, seed)
  return { name, model, inputSize, preprocessing: 'RGB scaled to [0,1]' }
}

const BUILTINS: Record<string, () => ZooEntry> = {
  'micro-cnn-10': () => buildMicroCnn('micro-cnn-10', 16, 10, 1016),
  'micro-cnn-100': () => buildMicroCnn('micro-cnn-100', 16, 100, 10016),
}

export function builtinNames(): string[] {
  return Object.keys(BUILTINS)
}

async function loadLocalLayersModel(dir: string): Promise<tf.LayersModel> {
  const modelJson = JSON.parse(fs.readFileSync(path.join(dir, 'model.json'), 'utf-8'))
  const weightData: Buffer[] = []
  const specs: tf.io.WeightsManifestEntry[] = []
  for (const group of modelJson.weightsManifest ?? []) {
    for (const p of group.paths) weightData.push(fs.readFileSync(path.join(dir, p)))
    specs.push(...group.weights)
  }
  const artifacts: tf.io.ModelArtifacts = {
    modelTopology: modelJson.modelTopology,
    weightSpecs: specs,
    weightData: Buffer.concat(weightData).buffer as ArrayBuffer,
  }
  return tf.loadLayersModel(tf.io.fromMemory(artifacts))
}

export async function resolveModel(name: string): Promise<ZooEntry> {
  const builtin = BUILTINS[name]
  if (builtin) return builtin()
  if (fs.existsSync(path.join(name, 'model.json'))) {
    const model = await loadLocalLayersModel(name)
    const shape = model.inputs[0].shape
    const inputSize = (shape[1] as number) ?? 16
    return { name, model, inputSize, preprocessing: 'RGB scaled to [0,1]' }
  }
  throw new Error(
    `unresolvable model ${JSON.stringify(name)}; built-ins: ${builtinNames().join(', ')}`,
  )
}

/** sub-model emitting the input of the final classification layer */
export function featureExtractor(entry: ZooEntry): tf.LayersModel {
  const layers = entry.model.layers
  if (layers.length < 2) {
    throw new Error(`model ${entry.name} has no layer before its head`)
  }
  const penultimate = layers[layers.length - 2]
  return tf.model({
    inputs: entry.model.inputs,
    outputs: penultimate.output as tf.SymbolicTensor,
  })
}
