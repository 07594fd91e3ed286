/**
 * Export pipeline: run a zoo model over a class-per-subdirectory image
 * folder and write penultimate-layer features or logits as .dpf plus a
 * manifest and a provenance sidecar.
 *
 * Rows follow lexicographic path order (classes, then files within each
 * class), so repeated runs are byte-identical. Unreadable images are
 * skipped with a warning and recorded in "<out>.skipped.log".
 */

import * as fs from 'fs'
import * as tf from '@tensorflow/tfjs'
import { FeatureSet, writeFeatureSet, writeManifest } from './dpf'
import { decodePng, listDataset, toModelInput } from './images'
import { featureExtractor, resolveModel } from './zoo'

export interface ExportJob {
  modelName: string
  dataDir: string
  /** square resolution; defaults to the model's native input */
  resize?: number
  batchSize: number
  kind: 'features' | 'logits'
  outPath: string
}

export interface ExportResult {
  nSamples: number
  dim: number
  classes: string[]
  perClassCounts: number[]
  skipped: string[]
}

function manifestPath(outPath: string): string {
  return outPath.replace(/\.dpf$/, '') + '_manifest.json'
}

export async function runExport(job: ExportJob): Promise<ExportResult> {
  if (job.batchSize < 1) throw new Error('batchSize must be >= 1')
  const entry = await resolveModel(job.modelName)
  const size = job.resize ?? entry.inputSize
  if (size < 1) throw new Error(`invalid resize ${size}`)
  const net = job.kind === 'features' ? featureExtractor(entry) : entry.model
  const needsResize = size !== entry.inputSize

  const listing = listDataset(job.dataDir)
  const rows: Float32Array[] = []
  const labels: number[] = []
  const skipped: string[] = []
  const perClassCounts = listing.classes.map(() => 0)

  let batch: tf.Tensor3D[] = []
  const flush = () => {
    if (batch.length === 0) return
    const out = tf.tidy(() => {
      let x: tf.Tensor = tf.stack(batch)
      if (needsResize) {
        x = tf.image.resizeBilinear(x as tf.Tensor4D, [entry.inputSize, entry.inputSize])
      }
      return net.predict(x) as tf.Tensor
    })
    const flat = out.dataSync() as Float32Array
    const dim = out.shape.slice(1).reduce((a, b) => a * (b ?? 1), 1)
    for (let i = 0; i < batch.length; i++) {
      rows.push(flat.slice(i * dim, (i + 1) * dim))
    }
    out.dispose()
    batch.forEach(t => t.dispose())
    batch = []
  }

  for (let cls = 0; cls < listing.classes.length; cls++) {
    for (const file of listing.files[cls]) {
      let img
      try {
        img = decodePng(file)
      } catch (err) {
        console.warn(`warning: skipping unreadable image ${file}: ${err}`)
        skipped.push(file)
        continue
      }
      batch.push(toModelInput(img, size))
      labels.push(cls)
      perClassCounts[cls]++
      if (batch.length >= job.batchSize) flush()
    }
  }
  flush()

  if (rows.length === 0) {
    throw new Error(`no usable images under ${job.dataDir}`)
  }

  const dim = rows[0].length
  const features = new Float32Array(rows.length * dim)
  rows.forEach((row, i) => features.set(row, i * dim))
  const set: FeatureSet = {
    nSamples: rows.length,
    dim,
    features,
    labels: Uint32Array.from(labels),
  }
  writeFeatureSet(set, job.outPath)
  writeManifest(
    {
      n_classes: listing.classes.length,
      class_names: listing.classes,
      per_class_counts: perClassCounts,
    },
    manifestPath(job.outPath),
  )
  const provenance = {
    model: entry.name,
    kind: job.kind,
    resize: size,
    preprocessing: entry.preprocessing,
    skipped_count: skipped.length,
  }
  fs.writeFileSync(job.outPath + '.provenance.json', JSON.stringify(provenance, null, 2) + '\n')
  if (skipped.length > 0) {
    fs.writeFileSync(job.outPath + '.skipped.log', skipped.join('\n') + '\n')
  }
  return {
    nSamples: rows.length,
    dim,
    classes: listing.classes,
    perClassCounts,
    skipped,
  }
}
