/**
 * Class-per-subdirectory image datasets: deterministic listing and PNG
 * decoding into [0,1] RGB tensors.
 */

import * as fs from 'fs'
import * as path from 'path'
import * as tf from '@tensorflow/tfjs'
import { PNG } from 'pngjs'

export interface DatasetListing {
  /** class names = subdirectory names, sorted by code unit */
  classes: string[]
  /** image paths grouped per class, each group sorted by code unit */
  files: string[][]
}

export function listDataset(dir: string): DatasetListing {
  if (!fs.existsSync(dir) || !fs.statSync(dir).isDirectory()) {
    throw new Error(`dataset directory not found: ${dir}`)
  }
  const classes = fs
    .readdirSync(dir)
    .filter(name => fs.statSync(path.join(dir, name)).isDirectory())
    .sort()
  if (classes.length === 0) {
    throw new Error(`no class subdirectories in ${dir}`)
  }
  const files = classes.map(cls =>
    fs
      .readdirSync(path.join(dir, cls))
      .filter(name => fs.statSync(path.join(dir, cls, name)).isFile())
      .sort()
      .map(name => path.join(dir, cls, name)),
  )
  return { classes, files }
}

export interface DecodedImage {
  width: number
  height: number
  /** HWC, RGB, values in [0,1] */
  data: Float32Array
}

export function decodePng(filePath: string): DecodedImage {
  const png = PNG.sync.read(fs.readFileSync(filePath))
  const data = new Float32Array(png.width * png.height * 3)
  for (let i = 0, j = 0; i < png.data.length; i += 4, j += 3) {
    data[j] = png.data[i] / 255
    data[j + 1] = png.data[i + 1] / 255
    data[j + 2] = png.data[i + 2] / 255
  }
  return { width: png.width, height: png.height, data }
}

export function toModelInput(img: DecodedImage, size: number): tf.Tensor3D {
  return tf.tidy(() => {
    const t = tf.tensor3d(img.data, [img.height, img.width, 3])
    if (img.height === size && img.width === size) return t
    return tf.image.resizeBilinear(t, [size, size])
  })
}
